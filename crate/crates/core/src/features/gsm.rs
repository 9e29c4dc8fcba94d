//! Grained-scanning baseline: raw-pixel sliding-window patches are classified
//! by one random forest and one completely-random forest, and the per-patch
//! class vectors are concatenated into a representation.

use std::path::Path;

use rand::seq::index;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::forest::{
    self, ForestKind, ForestParams, TrainSet, Forest,
};
use crate::imagio::{Image, NORMALIZED_SIZE};
use crate::matrix::Matrix;
use crate::seed;

use super::PatchGrid;

/// Window/stride pairs for the three baseline scales.
pub const GSM_GRIDS: [PatchGrid; 3] = [
    PatchGrid {
        window: 16,
        stride: 8,
    },
    PatchGrid {
        window: 32,
        stride: 16,
    },
    PatchGrid {
        window: 64,
        stride: 32,
    },
];

/// Representation length for a 128×128 image: patches × 2 forests × 2 classes.
pub fn representation_len(grid: PatchGrid) -> usize {
    let n = grid.positions(NORMALIZED_SIZE);
    n * n * 4
}

/// Raw pixels of every window position, row-major scan order. Each row is
/// `window² × 3` values laid out pixel-major with interleaved channels.
pub fn extract_patches(img: &Image, grid: PatchGrid) -> Result<Matrix> {
    let regions = grid.regions(img.width(), img.height());
    if regions.is_empty() {
        return Err(Error::invalid(format!(
            "window {} does not fit a {}×{} image",
            grid.window,
            img.width(),
            img.height()
        )));
    }
    let w = grid.window;
    let mut data = Vec::with_capacity(regions.len() * w * w * 3);
    for r in regions {
        for y in r.y..r.y + w {
            for x in r.x..r.x + w {
                let i = y * img.width() + x;
                for c in 0..3 {
                    data.push(img.plane(c)[i] as f32);
                }
            }
        }
    }
    let rows = data.len() / (w * w * 3);
    Matrix::from_vec(rows, w * w * 3, data)
}

/// The RF + CRF pair scanning one window size.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmForests {
    pub grid: PatchGrid,
    pub rf: Forest,
    pub crf: Forest,
}

/// One image's concatenated patch class vectors for one window size.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmRepresentation {
    pub grid: PatchGrid,
    pub values: Vec<f32>,
}

/// Trains the patch forests for one window size. Each patch row carries the
/// label of the image it was cut from.
pub fn gsm_train(
    patches: &Matrix,
    labels: &[u8],
    grid: PatchGrid,
    params: &ForestParams,
    seed: u64,
) -> Result<GsmForests> {
    let expected = grid.window * grid.window * 3;
    if patches.cols() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: patches.cols(),
        });
    }
    let data = TrainSet::new(patches, labels)?;
    let all: Vec<usize> = (0..data.n_samples()).collect();
    let rf_params = ForestParams {
        kind: ForestKind::Random,
        ..params.clone()
    };
    let crf_params = ForestParams {
        kind: ForestKind::CompletelyRandom,
        ..params.clone()
    };
    let (rf, crf) = rayon::join(
        || forest::train_forest(&data, &all, &rf_params, seed::derive(seed, &[0])),
        || forest::train_forest(&data, &all, &crf_params, seed::derive(seed, &[1])),
    );
    Ok(GsmForests {
        grid,
        rf: rf?,
        crf: crf?,
    })
}

/// Scans `img` and appends, per patch, the RF class vector then the CRF one.
pub fn gsm_representation(img: &Image, forests: &GsmForests) -> Result<GsmRepresentation> {
    let expected = forests.grid.window * forests.grid.window * 3;
    if forests.rf.n_features() != expected || forests.crf.n_features() != expected {
        return Err(Error::invalid(format!(
            "forests were trained for {} features, window {} needs {expected}",
            forests.rf.n_features(),
            forests.grid.window
        )));
    }
    let patches = extract_patches(img, forests.grid)?;
    let rf = forests.rf.predict_matrix(&patches)?;
    let crf = forests.crf.predict_matrix(&patches)?;
    let mut values = Vec::with_capacity(patches.rows() * 4);
    for (a, b) in rf.iter().zip(&crf) {
        values.extend([a[0] as f32, a[1] as f32, b[0] as f32, b[1] as f32]);
    }
    Ok(GsmRepresentation {
        grid: forests.grid,
        values,
    })
}

/// Training settings for the three-window baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmConfig {
    pub forest: ForestParams,
    /// Image-level folds used to cross-fit training representations.
    pub folds: usize,
    /// Cap on patch rows per forest; patches beyond it are subsampled.
    pub max_patches: usize,
    pub seed: u64,
}

/// Patch forests for all three windows.
#[derive(Debug, Clone, PartialEq)]
pub struct GsmModel {
    pub scanners: [GsmForests; 3],
}

impl GsmModel {
    /// The three baseline representations of one image.
    pub fn represent(&self, img: &Image) -> Result<[Vec<f32>; 3]> {
        let reps: Vec<Vec<f32>> = self
            .scanners
            .iter()
            .map(|s| gsm_representation(img, s).map(|r| r.values))
            .collect::<Result<_>>()?;
        Ok(reps.try_into().expect("three scanners"))
    }

    fn file_names(grid: PatchGrid) -> [String; 2] {
        ["rf", "crf"].map(|k| format!("w{}_{k}.json", grid.window))
    }

    /// Writes `w{window}_rf.json` and `w{window}_crf.json` per window.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in &self.scanners {
            for (name, f) in Self::file_names(s.grid).iter().zip([&s.rf, &s.crf]) {
                let path = dir.join(name);
                std::fs::write(&path, f.to_json()).map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let mut scanners = Vec::with_capacity(3);
        for grid in GSM_GRIDS {
            let [rf, crf] = Self::file_names(grid).map(|name| {
                let path = dir.join(name);
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                Forest::from_json(&text)
            });
            let (rf, crf) = (rf?, crf?);
            let expected = grid.window * grid.window * 3;
            if rf.n_features() != expected || crf.n_features() != expected {
                return Err(Error::Format {
                    what: "scanning forests",
                    reason: format!("window {} needs {expected} features", grid.window),
                });
            }
            scanners.push(GsmForests { grid, rf, crf });
        }
        Ok(GsmModel {
            scanners: scanners.try_into().expect("three windows"),
        })
    }
}

fn patch_training_set(
    images: &[Image],
    labels: &[u8],
    members: &[usize],
    grid: PatchGrid,
    max_patches: usize,
    seed: u64,
) -> Result<(Matrix, Vec<u8>)> {
    let per_image = grid.positions(NORMALIZED_SIZE).pow(2);
    let total = members.len() * per_image;
    let mut picks: Vec<usize> = if total > max_patches {
        index::sample(&mut seed::rng(seed), total, max_patches).into_vec()
    } else {
        (0..total).collect()
    };
    picks.sort_unstable();
    let cols = grid.window * grid.window * 3;
    let mut data = Vec::with_capacity(picks.len() * cols);
    let mut y = Vec::with_capacity(picks.len());
    let mut cached: Option<(usize, Matrix)> = None;
    for p in picks {
        let m = members[p / per_image];
        if cached.as_ref().is_none_or(|(i, _)| *i != m) {
            cached = Some((m, extract_patches(&images[m], grid)?));
        }
        let (_, patches) = cached.as_ref().expect("filled above");
        data.extend_from_slice(patches.row(p % per_image));
        y.push(labels[m]);
    }
    Ok((Matrix::from_vec(y.len(), cols, data)?, y))
}

/// Trains the baseline scanners and returns the training images'
/// representations.
///
/// Training representations are cross-fitted at image level: each image is
/// represented by scanners that never saw its patches, so the cascade on top
/// does not learn from memorized patches. The returned model is trained on
/// every image.
pub fn fit_gsm(images: &[Image], labels: &[u8], cfg: &GsmConfig) -> Result<(GsmModel, [Matrix; 3])> {
    if images.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: images.len(),
            got: labels.len(),
        });
    }
    if images.is_empty() {
        return Err(Error::degenerate("no images for the scanning forests"));
    }
    for img in images {
        super::check_size(img)?;
    }
    let all: Vec<usize> = (0..images.len()).collect();
    let fold_of = forest::stratified_folds(labels, &all, cfg.folds, seed::derive(cfg.seed, &[0]))?;
    let mut scanners = Vec::with_capacity(3);
    let mut train_reps = Vec::with_capacity(3);
    for (g, &grid) in GSM_GRIDS.iter().enumerate() {
        let g = g as u64;
        let width = representation_len(grid);
        let mut reps = Matrix::zeros(images.len(), width);
        for fold in 0..cfg.folds {
            let train: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] != fold).collect();
            let held: Vec<usize> = all.iter().copied().filter(|&i| fold_of[i] == fold).collect();
            let (x, y) = patch_training_set(
                images,
                labels,
                &train,
                grid,
                cfg.max_patches,
                seed::derive(cfg.seed, &[1, g, fold as u64]),
            )?;
            let forests = gsm_train(&x, &y, grid, &cfg.forest, seed::derive(cfg.seed, &[2, g, fold as u64]))?;
            let rows: Vec<Vec<f32>> = held
                .par_iter()
                .map(|&i| gsm_representation(&images[i], &forests).map(|r| r.values))
                .collect::<Result<_>>()?;
            for (&i, row) in held.iter().zip(rows) {
                reps.row_mut(i).copy_from_slice(&row);
            }
        }
        let (x, y) = patch_training_set(
            images,
            labels,
            &all,
            grid,
            cfg.max_patches,
            seed::derive(cfg.seed, &[3, g]),
        )?;
        scanners.push(gsm_train(&x, &y, grid, &cfg.forest, seed::derive(cfg.seed, &[4, g]))?);
        train_reps.push(reps);
    }
    let scanners: [GsmForests; 3] = scanners.try_into().expect("three windows");
    let train_reps: [Matrix; 3] = train_reps.try_into().expect("three windows");
    Ok((GsmModel { scanners }, train_reps))
}
