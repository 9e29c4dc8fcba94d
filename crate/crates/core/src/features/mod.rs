//! Multi-scale color LBP representations over the 7×7 patch grid, plus the
//! grained-scanning baseline ([`gsm`]) and the on-disk feature cache
//! ([`cache`]).

pub mod cache;
pub mod gsm;

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagio::{ColorSpace, Image, NORMALIZED_SIZE};
use crate::lbp::{lbp_codes, region_counts, LbpConfig, Region};

/// Sliding window layout shared by the LBP path: 32-pixel windows every 16
/// pixels, 7×7 positions on a 128×128 image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub window: usize,
    pub stride: usize,
}

impl PatchGrid {
    pub const LBP: PatchGrid = PatchGrid {
        window: 32,
        stride: 16,
    };

    /// Window positions along one axis of length `size`.
    pub fn positions(&self, size: usize) -> usize {
        if size < self.window {
            0
        } else {
            (size - self.window) / self.stride + 1
        }
    }

    /// Patch rectangles in row-major order, top-left origin.
    pub fn regions(&self, width: usize, height: usize) -> Vec<Region> {
        let (cols, rows) = (self.positions(width), self.positions(height));
        (0..rows)
            .flat_map(|r| {
                (0..cols).map(move |c| Region {
                    x: c * self.stride,
                    y: r * self.stride,
                    w: self.window,
                    h: self.window,
                })
            })
            .collect()
    }
}

/// The three LBP scales: S1 = (8, 1), S2 = (16, 2), S3 = (24, 3).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scale {
    S1,
    S2,
    S3,
}

impl Scale {
    pub const ALL: [Scale; 3] = [Scale::S1, Scale::S2, Scale::S3];

    /// 1-based scale index.
    pub fn index(self) -> usize {
        match self {
            Scale::S1 => 1,
            Scale::S2 => 2,
            Scale::S3 => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<Scale> {
        match i {
            1 => Some(Scale::S1),
            2 => Some(Scale::S2),
            3 => Some(Scale::S3),
            _ => None,
        }
    }

    pub fn neighbors(self) -> u32 {
        8 * self.index() as u32
    }

    pub fn radius(self) -> u32 {
        self.index() as u32
    }

    pub fn lbp(self) -> &'static LbpConfig {
        static CONFIGS: OnceLock<[LbpConfig; 3]> = OnceLock::new();
        let configs = CONFIGS.get_or_init(|| {
            Scale::ALL.map(|s| LbpConfig::new(s.neighbors(), s.radius()).expect("preset (P, R)"))
        });
        &configs[self.index() - 1]
    }

    /// Histogram bins per patch and channel: 59, 243, 555.
    pub fn bins(self) -> usize {
        crate::lbp::bin_count(self.neighbors())
    }

    /// Full representation length for a 128×128 image.
    pub fn len(self) -> usize {
        let n = PatchGrid::LBP.positions(NORMALIZED_SIZE);
        n * n * 3 * self.bins()
    }
}

/// One image's concatenated patch histograms at one scale.
///
/// Layout: patch (row-major) → channel → bin.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleRepresentation {
    pub scale: Scale,
    pub space: ColorSpace,
    pub values: Vec<f32>,
}

fn check_size(img: &Image) -> Result<()> {
    if img.width() != NORMALIZED_SIZE || img.height() != NORMALIZED_SIZE {
        return Err(Error::invalid(format!(
            "feature extraction expects a {0}×{0} image, got {1}×{2}",
            NORMALIZED_SIZE,
            img.width(),
            img.height()
        )));
    }
    Ok(())
}

/// Computes one channel's codes once over the whole plane and pools them
/// into every patch, returning `[patch][bin]` histograms.
fn channel_histograms(img: &Image, channel: usize, scale: Scale) -> Result<Vec<Vec<f32>>> {
    let cfg = scale.lbp();
    let codes = lbp_codes(img.plane(channel), img.width(), img.height(), cfg)?;
    PatchGrid::LBP
        .regions(img.width(), img.height())
        .into_iter()
        .map(|region| {
            let counts = region_counts(&codes, region)?;
            let total: u32 = counts.iter().sum();
            Ok(counts
                .iter()
                .map(|&c| if total == 0 { 0.0 } else { (c as f64 / total as f64) as f32 })
                .collect())
        })
        .collect()
}

pub fn extract_scale(img: &Image, scale: Scale) -> Result<ScaleRepresentation> {
    check_size(img)?;
    let per_channel: Vec<Vec<Vec<f32>>> = (0..3)
        .into_par_iter()
        .map(|c| channel_histograms(img, c, scale))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(scale.len());
    for patch in 0..per_channel[0].len() {
        for channel in &per_channel {
            values.extend_from_slice(&channel[patch]);
        }
    }
    debug_assert_eq!(values.len(), scale.len());
    Ok(ScaleRepresentation {
        scale,
        space: img.space(),
        values,
    })
}

/// S1, S2 and S3 for one image.
pub fn extract_all_scales(img: &Image) -> Result<[ScaleRepresentation; 3]> {
    check_size(img)?;
    let reps: Vec<ScaleRepresentation> = Scale::ALL
        .par_iter()
        .map(|&s| extract_scale(img, s))
        .collect::<Result<_>>()?;
    let [a, b, c]: [ScaleRepresentation; 3] = reps.try_into().expect("three scales");
    Ok([a, b, c])
}

#[cfg(test)]
#[path = "../../tests/support/oracle.rs"]
mod oracle;
