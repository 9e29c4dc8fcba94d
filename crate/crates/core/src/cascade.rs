//! Deep-forest cascade with circular multi-scale fusion.
//!
//! Layer `n` (1-based) reads scale `((n - 1) mod 3) + 1` concatenated with
//! the 16 class-vector values produced by layer `n - 1`. Each layer holds
//! four random forests and four completely-random forests. During training
//! the augmentation handed to the next layer is cross-fitted with
//! [`kfold_class_vectors`]; at inference the all-data forests are used.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval;
use crate::forest::{
    self, kfold_class_vectors, FoldRecord, Forest, ForestKind, ForestParams, TrainSet,
};
use crate::matrix::Matrix;
use crate::seed;

pub const RANDOM_FORESTS_PER_LAYER: usize = 4;
pub const COMPLETELY_RANDOM_FORESTS_PER_LAYER: usize = 4;
pub const FORESTS_PER_LAYER: usize = RANDOM_FORESTS_PER_LAYER + COMPLETELY_RANDOM_FORESTS_PER_LAYER;
/// Class-vector values appended to the next layer's input.
pub const AUGMENT_WIDTH: usize = FORESTS_PER_LAYER * 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub n_trees: usize,
    pub folds: usize,
    /// Layers without strict validation improvement before growth stops.
    pub patience: usize,
    pub max_layers: usize,
    #[serde(default)]
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            n_trees: 500,
            folds: 3,
            patience: 2,
            max_layers: 12,
            max_depth: None,
            seed: 0,
        }
    }
}

impl CascadeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be positive"));
        }
        if self.folds < 2 {
            return Err(Error::invalid("folds must be at least 2"));
        }
        if self.patience == 0 {
            return Err(Error::invalid("patience must be positive"));
        }
        if self.max_layers == 0 {
            return Err(Error::invalid("max_layers must be positive"));
        }
        Ok(())
    }

    fn forest_params(&self, slot: usize) -> ForestParams {
        let kind = if slot < RANDOM_FORESTS_PER_LAYER {
            ForestKind::Random
        } else {
            ForestKind::CompletelyRandom
        };
        ForestParams {
            max_depth: self.max_depth,
            ..ForestParams::new(kind, self.n_trees)
        }
    }
}

/// 1-based scale index consumed by 1-based layer `n`.
pub fn scale_for_layer(n: usize) -> usize {
    (n - 1) % 3 + 1
}

/// Input vector of layer `n`: the scheduled scale followed by the previous
/// layer's augmentation.
pub fn layer_input(n: usize, scales: [&[f32]; 3], prev_aug: Option<&[f32]>) -> Result<Vec<f32>> {
    if n == 0 {
        return Err(Error::invalid("layers are numbered from 1"));
    }
    let scale = scales[scale_for_layer(n) - 1];
    if scale.is_empty() {
        return Err(Error::invalid(format!(
            "scale S{} is missing",
            scale_for_layer(n)
        )));
    }
    match (n, prev_aug) {
        (1, None) => Ok(scale.to_vec()),
        (1, Some(_)) => Err(Error::invalid("layer 1 takes no augmentation")),
        (_, None) => Err(Error::invalid(format!("layer {n} needs the previous augmentation"))),
        (_, Some(aug)) => {
            if aug.len() != AUGMENT_WIDTH {
                return Err(Error::DimensionMismatch {
                    expected: AUGMENT_WIDTH,
                    got: aug.len(),
                });
            }
            let mut v = Vec::with_capacity(scale.len() + AUGMENT_WIDTH);
            v.extend_from_slice(scale);
            v.extend_from_slice(aug);
            Ok(v)
        }
    }
}

/// Patience-based early stopping over per-layer validation accuracies.
#[derive(Debug, Clone)]
pub struct Convergence {
    patience: usize,
    max_layers: usize,
    layers: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl Convergence {
    pub fn new(patience: usize, max_layers: usize) -> Self {
        Convergence {
            patience,
            max_layers,
            layers: 0,
            best: None,
            stale: 0,
        }
    }

    /// Records the next layer's accuracy; returns `false` once growth should
    /// stop.
    pub fn observe(&mut self, accuracy: f64) -> bool {
        self.layers += 1;
        match self.best {
            Some((_, best)) if accuracy <= best => self.stale += 1,
            _ => {
                self.best = Some((self.layers, accuracy));
                self.stale = 0;
            }
        }
        self.stale < self.patience && self.layers < self.max_layers
    }

    /// 1-based index of the earliest layer with the highest accuracy.
    pub fn best_layer(&self) -> Option<usize> {
        self.best.map(|(layer, _)| layer)
    }
}

/// Samples with their three scale matrices (rows aligned with `labels`).
#[derive(Debug, Clone, Copy)]
pub struct ScaleData<'a> {
    pub scales: [&'a Matrix; 3],
    pub labels: &'a [u8],
}

impl<'a> ScaleData<'a> {
    pub fn new(scales: [&'a Matrix; 3], labels: &'a [u8]) -> Result<Self> {
        for m in scales {
            if m.rows() != labels.len() {
                return Err(Error::DimensionMismatch {
                    expected: labels.len(),
                    got: m.rows(),
                });
            }
        }
        Ok(ScaleData { scales, labels })
    }

    fn check_labels(&self, what: &str) -> Result<()> {
        if self.labels.is_empty() {
            return Err(Error::degenerate(format!("{what} set is empty")));
        }
        let spoof = self.labels.iter().filter(|&&l| l == forest::SPOOF).count();
        if spoof == 0 || spoof == self.labels.len() {
            return Err(Error::degenerate(format!("{what} set has a single class")));
        }
        Ok(())
    }

    fn layer_matrix(&self, n: usize, aug: Option<&Matrix>) -> Result<Matrix> {
        let scale = self.scales[scale_for_layer(n) - 1];
        match aug {
            None => Ok(scale.clone()),
            Some(aug) => scale.hstack(aug),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    /// 1-based layer number.
    pub index: usize,
    /// 1-based scale index.
    pub scale: usize,
    pub forests: Vec<Forest>,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeModel {
    pub config: CascadeConfig,
    pub scale_lengths: [usize; 3],
    pub layers: Vec<Layer>,
    /// 1-based layer whose output is the model score.
    pub best_layer: usize,
    /// EER threshold of the best layer on the validation set.
    pub dev_threshold: f64,
    /// Free-form provenance recorded with the model.
    pub provenance: serde_json::Value,
}

/// Per-layer bookkeeping collected while training.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    pub index: usize,
    pub scale: usize,
    pub input_width: usize,
    pub measured_accuracy: f64,
    pub accuracy: f64,
    /// Fold records of each of the 8 forests' cross-fitting.
    pub folds: Vec<Vec<FoldRecord>>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CascadeTrace {
    pub layers: Vec<LayerTrace>,
}

/// Cascade trainer. The accuracy script replaces measured validation
/// accuracies layer by layer, which lets the stopping rule be exercised
/// deterministically.
#[derive(Debug, Clone)]
pub struct CascadeTrainer {
    config: CascadeConfig,
    accuracy_script: Option<Vec<f64>>,
}

impl CascadeTrainer {
    pub fn new(config: CascadeConfig) -> Self {
        CascadeTrainer {
            config,
            accuracy_script: None,
        }
    }

    pub fn with_accuracy_script(mut self, script: Vec<f64>) -> Self {
        self.accuracy_script = Some(script);
        self
    }

    pub fn train(&self, train: &ScaleData, val: &ScaleData) -> Result<(CascadeModel, CascadeTrace)> {
        let cfg = &self.config;
        cfg.validate()?;
        train.check_labels("training")?;
        val.check_labels("validation")?;
        let scale_lengths = train.scales.map(|m| m.cols());
        if val.scales.map(|m| m.cols()) != scale_lengths {
            return Err(Error::invalid("train and validation scale widths differ"));
        }
        if scale_lengths.contains(&0) {
            return Err(Error::invalid("a scale matrix has no columns"));
        }
        let all: Vec<usize> = (0..train.labels.len()).collect();
        let mut rule = Convergence::new(cfg.patience, cfg.max_layers);
        let mut layers = Vec::new();
        let mut trace = CascadeTrace::default();
        let mut val_scores_by_layer = Vec::new();
        let mut train_aug: Option<Matrix> = None;
        let mut val_aug: Option<Matrix> = None;

        for n in 1..=cfg.max_layers {
            let x_train = train.layer_matrix(n, train_aug.as_ref())?;
            let x_val = val.layer_matrix(n, val_aug.as_ref())?;
            let data = TrainSet::new(&x_train, train.labels)?;
            drop(x_train);
            let outputs: Vec<forest::KFoldOutput> = (0..FORESTS_PER_LAYER)
                .into_par_iter()
                .map(|slot| {
                    kfold_class_vectors(
                        &data,
                        &all,
                        &cfg.forest_params(slot),
                        cfg.folds,
                        seed::derive(cfg.seed, &[n as u64, slot as u64]),
                    )
                })
                .collect::<Result<_>>()?;
            drop(data);

            let mut next_train = Matrix::zeros(all.len(), AUGMENT_WIDTH);
            for (slot, out) in outputs.iter().enumerate() {
                for (i, v) in out.vectors.iter().enumerate() {
                    next_train.row_mut(i)[2 * slot..2 * slot + 2]
                        .copy_from_slice(&[v[0] as f32, v[1] as f32]);
                }
            }
            let forests: Vec<Forest> = outputs.iter().map(|o| o.final_forest.clone()).collect();
            let (next_val, val_scores) = augment(&forests, &x_val)?;
            let measured = accuracy(&val_scores, val.labels);
            let acc = match &self.accuracy_script {
                Some(script) => *script.get(n - 1).ok_or_else(|| {
                    Error::invalid(format!("accuracy script has no entry for layer {n}"))
                })?,
                None => measured,
            };
            trace.layers.push(LayerTrace {
                index: n,
                scale: scale_for_layer(n),
                input_width: x_val.cols(),
                measured_accuracy: measured,
                accuracy: acc,
                folds: outputs.into_iter().map(|o| o.folds).collect(),
            });
            layers.push(Layer {
                index: n,
                scale: scale_for_layer(n),
                forests,
                val_accuracy: acc,
            });
            val_scores_by_layer.push(val_scores);
            train_aug = Some(next_train);
            val_aug = Some(next_val);
            if !rule.observe(acc) {
                break;
            }
        }
        let best_layer = rule.best_layer().expect("at least one layer");
        let dev = eval::scored(&val_scores_by_layer[best_layer - 1], val.labels)?;
        let (_, dev_threshold) = eval::eer(&dev)?;
        Ok((
            CascadeModel {
                config: cfg.clone(),
                scale_lengths,
                layers,
                best_layer,
                dev_threshold,
                provenance: serde_json::Value::Null,
            },
            trace,
        ))
    }
}

/// Trains a cascade on `train`, using `val` for the stopping rule.
pub fn train_cascade(train: &ScaleData, val: &ScaleData, cfg: &CascadeConfig) -> Result<CascadeModel> {
    CascadeTrainer::new(cfg.clone())
        .train(train, val)
        .map(|(model, _)| model)
}

/// Runs a layer's forests over `x`, returning the 16-wide augmentation and
/// the mean spoof probability per row.
fn augment(forests: &[Forest], x: &Matrix) -> Result<(Matrix, Vec<f64>)> {
    let preds: Vec<Vec<[f64; 2]>> = forests
        .iter()
        .map(|f| f.predict_matrix(x))
        .collect::<Result<_>>()?;
    let mut aug = Matrix::zeros(x.rows(), AUGMENT_WIDTH);
    let mut scores = vec![0.0; x.rows()];
    for (slot, p) in preds.iter().enumerate() {
        for (i, v) in p.iter().enumerate() {
            aug.row_mut(i)[2 * slot..2 * slot + 2].copy_from_slice(&[v[0] as f32, v[1] as f32]);
            scores[i] += v[1];
        }
    }
    for s in &mut scores {
        *s = (*s / forests.len() as f64).clamp(0.0, 1.0);
    }
    Ok((aug, scores))
}

/// Fraction of rows whose averaged prediction (spoof iff score > 0.5)
/// matches the label.
fn accuracy(scores: &[f64], labels: &[u8]) -> f64 {
    let correct = scores
        .iter()
        .zip(labels)
        .filter(|(&s, &l)| u8::from(s > 0.5) == l)
        .count();
    correct as f64 / labels.len() as f64
}

impl CascadeModel {
    fn check_scales(&self, widths: [usize; 3]) -> Result<()> {
        for (s, (&got, &want)) in widths.iter().zip(&self.scale_lengths).enumerate() {
            if got != want {
                return Err(Error::invalid(format!(
                    "scale S{} has length {got}, the model expects {want}",
                    s + 1
                )));
            }
        }
        Ok(())
    }

    /// Spoof probability of one sample: mean over the best layer's forests.
    pub fn predict_score(&self, scales: [&[f32]; 3]) -> Result<f64> {
        self.check_scales(scales.map(|s| s.len()))?;
        let mut aug: Option<Vec<f32>> = None;
        for layer in &self.layers[..self.best_layer] {
            let input = layer_input(layer.index, scales, aug.as_deref())?;
            let mut next = Vec::with_capacity(AUGMENT_WIDTH);
            let mut spoof = 0.0;
            for f in &layer.forests {
                let p = f.predict_proba(&input)?;
                next.extend([p[0] as f32, p[1] as f32]);
                spoof += p[1];
            }
            if layer.index == self.best_layer {
                return Ok((spoof / layer.forests.len() as f64).clamp(0.0, 1.0));
            }
            aug = Some(next);
        }
        unreachable!("best_layer lies within the layer list")
    }

    /// Row-wise [`CascadeModel::predict_score`].
    pub fn predict_scores(&self, scales: [&Matrix; 3]) -> Result<Vec<f64>> {
        self.check_scales(scales.map(|m| m.cols()))?;
        let n = scales[0].rows();
        if scales.iter().any(|m| m.rows() != n) {
            return Err(Error::invalid("scale matrices differ in sample count"));
        }
        (0..n)
            .into_par_iter()
            .map(|i| self.predict_score(scales.map(|m| m.row(i))))
            .collect()
    }

    /// Inference forests of the best layer.
    pub fn best_layer_forests(&self) -> &[Forest] {
        &self.layers[self.best_layer - 1].forests
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct LayerRecord {
    index: usize,
    scale: usize,
    val_accuracy: f64,
    forests: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CascadeFile {
    format: String,
    version: u32,
    config: CascadeConfig,
    scale_lengths: [usize; 3],
    best_layer: usize,
    dev_threshold: f64,
    layers: Vec<LayerRecord>,
    provenance: serde_json::Value,
}

const CASCADE_FORMAT: &str = "lbpforest.cascade";
const CASCADE_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "cascade.json";

fn forest_file(layer: usize, slot: usize, kind: ForestKind) -> String {
    format!("forests/layer{layer:02}_forest{slot}_{}.json", kind.name())
}

impl CascadeModel {
    /// Writes `cascade.json` plus one forest file per layer and slot under
    /// `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("forests")).map_err(|e| Error::io(dir, e))?;
        let mut records = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut names = Vec::with_capacity(layer.forests.len());
            for (slot, f) in layer.forests.iter().enumerate() {
                let name = forest_file(layer.index, slot, f.kind());
                let path = dir.join(&name);
                std::fs::write(&path, f.to_json()).map_err(|e| Error::io(&path, e))?;
                names.push(name);
            }
            records.push(LayerRecord {
                index: layer.index,
                scale: layer.scale,
                val_accuracy: layer.val_accuracy,
                forests: names,
            });
        }
        let file = CascadeFile {
            format: CASCADE_FORMAT.into(),
            version: CASCADE_VERSION,
            config: self.config.clone(),
            scale_lengths: self.scale_lengths,
            best_layer: self.best_layer,
            dev_threshold: self.dev_threshold,
            layers: records,
            provenance: self.provenance.clone(),
        };
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&file).expect("cascade manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let path = dir.join(MANIFEST_NAME);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let bad = |reason: String| Error::Format {
            what: "cascade manifest",
            reason,
        };
        let file: CascadeFile = serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if file.format != CASCADE_FORMAT || file.version != CASCADE_VERSION {
            return Err(bad(format!("unsupported format {} v{}", file.format, file.version)));
        }
        if file.best_layer == 0 || file.best_layer > file.layers.len() {
            return Err(bad(format!("best_layer {} out of range", file.best_layer)));
        }
        let mut layers = Vec::with_capacity(file.layers.len());
        for (i, rec) in file.layers.into_iter().enumerate() {
            if rec.index != i + 1 || rec.scale != scale_for_layer(rec.index) {
                return Err(bad(format!("layer {} breaks the scale schedule", rec.index)));
            }
            if rec.forests.len() != FORESTS_PER_LAYER {
                return Err(bad(format!("layer {} holds {} forests", rec.index, rec.forests.len())));
            }
            let forests = rec
                .forests
                .iter()
                .map(|name| {
                    let p = dir.join(name);
                    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                    Forest::from_json(&text)
                })
                .collect::<Result<Vec<_>>>()?;
            let aug = if rec.index == 1 { 0 } else { AUGMENT_WIDTH };
            let width = file.scale_lengths[rec.scale - 1] + aug;
            if forests.iter().any(|f| f.n_features() != width) {
                return Err(bad(format!("layer {} forests do not take {width} features", rec.index)));
            }
            layers.push(Layer {
                index: rec.index,
                scale: rec.scale,
                forests,
                val_accuracy: rec.val_accuracy,
            });
        }
        Ok(CascadeModel {
            config: file.config,
            scale_lengths: file.scale_lengths,
            layers,
            best_layer: file.best_layer,
            dev_threshold: file.dev_threshold,
            provenance: file.provenance,
        })
    }
}
