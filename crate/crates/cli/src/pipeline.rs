//! The commands behind the binary: extract, train, eval and score.
//!
//! Artifacts embed the resolved run configuration and a SHA-256 of the
//! inputs they were built from. Nothing time- or path-dependent is recorded,
//! so identical inputs give byte-identical outputs.

use std::path::Path;

use lbpforest::cascade::{train_cascade, CascadeModel, ScaleData};
use lbpforest::eval::{self, EvalReport, FoldReport, ScoredSample};
use lbpforest::features::cache::FeatureCache;
use lbpforest::features::gsm::{fit_gsm, representation_len, GsmConfig, GsmModel, GSM_GRIDS};
use lbpforest::features::{extract_all_scales, Scale};
use lbpforest::forest::{self, ForestKind, ForestParams};
use lbpforest::imagio::{self, Image};
use lbpforest::{seed, Matrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Aggregation, ContentHash, Protocol, RunConfig};
use crate::error::{CliError, Result};
use crate::manifest::{DatasetManifest, Record};

pub const CACHE_FORMAT: &str = "lbpforest.features";
pub const RUN_FORMAT: &str = "lbpforest.run";
pub const RUN_FILE: &str = "model.json";
/// Share of each training partition held out for cascade stopping.
pub const VALIDATION_FOLDS: usize = 5;

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::io(path, e))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn to_json_pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("artifact serializes")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub format: String,
    pub run_config: serde_json::Value,
    pub input_hash: String,
    pub records: Vec<Record>,
}

/// Hash of a manifest file and every image it lists.
pub fn manifest_hash(manifest_path: &Path, manifest: &DatasetManifest) -> Result<String> {
    let mut h = ContentHash::new();
    h.update("manifest", &read(manifest_path)?);
    for r in &manifest.records {
        h.update(&r.path, &read(&manifest.resolve(r))?);
    }
    Ok(h.finish())
}

/// Loads, resizes and converts one manifest image.
pub fn load_image(manifest: &DatasetManifest, record: &Record, cfg: &RunConfig) -> Result<Image> {
    Ok(imagio::load_normalized(manifest.resolve(record), cfg.color_space)?)
}

/// Extracts the three LBP scales of every manifest row.
pub fn extract(manifest_path: &Path, cfg: &RunConfig) -> Result<FeatureCache> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let rows: Vec<[Vec<f32>; 3]> = manifest
        .records
        .par_iter()
        .map(|r| {
            let img = load_image(&manifest, r, cfg)?;
            Ok(extract_all_scales(&img)?.map(|s| s.values))
        })
        .collect::<Result<_>>()?;
    let widths = Scale::ALL.map(Scale::len);
    let scales = stack(&rows, widths)?;
    let meta = CacheMeta {
        format: CACHE_FORMAT.into(),
        run_config: cfg.to_json(),
        input_hash: manifest_hash(manifest_path, &manifest)?,
        records: manifest.records.clone(),
    };
    Ok(FeatureCache::new(cfg.color_space, serde_json::to_string(&meta).expect("meta serializes"), scales)?)
}

pub fn cmd_extract(manifest_path: &Path, cfg: &RunConfig, out: &Path) -> Result<FeatureCache> {
    let cache = extract(manifest_path, cfg)?;
    cache.save(out)?;
    Ok(cache)
}

pub fn load_cache(path: &Path) -> Result<(FeatureCache, CacheMeta)> {
    let cache = FeatureCache::load(path)?;
    let meta: CacheMeta = serde_json::from_str(&cache.metadata)
        .map_err(|e| CliError::Input(format!("{}: cache metadata: {e}", path.display())))?;
    if meta.format != CACHE_FORMAT || meta.records.len() != cache.n_samples() {
        return Err(CliError::Input(format!("{}: not an extraction cache", path.display())));
    }
    Ok((cache, meta))
}

fn check_alignment(meta: &CacheMeta, manifest: &DatasetManifest) -> Result<()> {
    let same = meta.records.len() == manifest.len()
        && meta
            .records
            .iter()
            .zip(&manifest.records)
            .all(|(a, b)| a.path == b.path && a.label == b.label);
    if same {
        Ok(())
    } else {
        Err(CliError::Input("cache rows do not match the manifest; re-run extract".into()))
    }
}

/// Test-fold id of every row. Manifest folds are used when present,
/// otherwise subject-disjoint folds are drawn from the seed. Under holdout,
/// fold 0 is the test set.
pub fn assign_folds(manifest: &DatasetManifest, protocol: Protocol, run_seed: u64) -> Result<Vec<usize>> {
    let k = protocol.folds();
    if manifest.has_folds() {
        let folds: Vec<usize> = manifest.records.iter().map(|r| r.fold.expect("checked")).collect();
        if protocol == Protocol::Kfold5 {
            if let Some(bad) = folds.iter().find(|&&f| f >= k) {
                return Err(CliError::Input(format!("fold {bad} outside 0..{k} for kfold5")));
            }
        }
        return Ok(folds);
    }
    let records: Vec<(&str, eval::Label)> = manifest.records.iter().map(|r| (r.subject.as_str(), r.label)).collect();
    Ok(eval::kfold_split(&records, k, seed::derive(run_seed, &[100]))?)
}

/// Splits `members` into cascade-training and validation rows: subject
/// disjoint when there are enough subjects, stratified by sample otherwise.
pub fn validation_split(manifest: &DatasetManifest, members: &[usize], split_seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let records: Vec<(&str, eval::Label)> = members
        .iter()
        .map(|&i| (manifest.records[i].subject.as_str(), manifest.records[i].label))
        .collect();
    let folds = match eval::kfold_split(&records, VALIDATION_FOLDS, split_seed) {
        Ok(f) => f,
        Err(_) => forest::stratified_folds(&manifest.labels(), members, VALIDATION_FOLDS, split_seed)?,
    };
    let (mut train, mut val) = (Vec::new(), Vec::new());
    for (&i, &f) in members.iter().zip(&folds) {
        if f == 0 { val.push(i) } else { train.push(i) }
    }
    Ok((train, val))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldModel {
    /// Fold held out as the test set.
    pub fold: usize,
    pub dir: String,
    pub n_train: usize,
    pub n_val: usize,
    pub gsm: bool,
}

/// Top-level description of a trained run, `model.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunModel {
    pub format: String,
    pub version: u32,
    pub run_config: RunConfig,
    pub input_hash: String,
    /// Test-fold id per manifest row.
    pub assignment: Vec<usize>,
    pub folds: Vec<FoldModel>,
}

impl RunModel {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(RUN_FILE);
        let model: RunModel = serde_json::from_slice(&read(&path)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        if model.format != RUN_FORMAT || model.version != 1 {
            return Err(CliError::Input(format!("{}: unsupported run format", path.display())));
        }
        Ok(model)
    }

    pub fn cascade(&self, dir: &Path, fold: usize) -> Result<CascadeModel> {
        let f = self.fold(fold)?;
        Ok(CascadeModel::load(dir.join(&f.dir))?)
    }

    pub fn fold(&self, fold: usize) -> Result<&FoldModel> {
        self.folds
            .iter()
            .find(|f| f.fold == fold)
            .ok_or_else(|| CliError::Input(format!("the model has no fold {fold}")))
    }
}

fn select(scales: &[Matrix; 3], rows: &[usize]) -> [Matrix; 3] {
    scales.each_ref().map(|m| m.select_rows(rows))
}

fn pick<T: Clone>(values: &[T], rows: &[usize]) -> Vec<T> {
    rows.iter().map(|&i| values[i].clone()).collect()
}

fn fold_seed(cfg: &RunConfig, purpose: u64, fold: usize) -> u64 {
    seed::derive(cfg.seed, &[purpose, fold as u64])
}

fn gsm_config(cfg: &RunConfig, fold: usize) -> GsmConfig {
    GsmConfig {
        forest: ForestParams::new(ForestKind::Random, cfg.trees),
        folds: cfg.folds,
        max_patches: cfg.gsm_max_patches,
        seed: fold_seed(cfg, 103, fold),
    }
}

fn load_images(manifest: &DatasetManifest, rows: &[usize], cfg: &RunConfig) -> Result<Vec<Image>> {
    rows.par_iter().map(|&i| load_image(manifest, &manifest.records[i], cfg)).collect()
}

fn stack(rows: &[[Vec<f32>; 3]], widths: [usize; 3]) -> Result<[Matrix; 3]> {
    let mut out = Vec::with_capacity(3);
    for (s, &cols) in widths.iter().enumerate() {
        let data: Vec<f32> = rows.iter().flat_map(|r| r[s].iter().copied()).collect();
        out.push(Matrix::from_vec(rows.len(), cols, data)?);
    }
    Ok(out.try_into().expect("three scales"))
}

fn gsm_reps(scanners: &GsmModel, images: &[Image]) -> Result<[Matrix; 3]> {
    let rows: Vec<[Vec<f32>; 3]> = images
        .par_iter()
        .map(|img| scanners.represent(img))
        .collect::<lbpforest::Result<_>>()?;
    stack(&rows, GSM_GRIDS.map(representation_len))
}

/// Trains one cascade per test fold (one under holdout, five under
/// kfold5) and writes them under `out`.
pub fn cmd_train(cache_path: &Path, manifest_path: &Path, cfg: &RunConfig, out: &Path) -> Result<RunModel> {
    let manifest = DatasetManifest::load(manifest_path)?;
    let (cache, meta) = load_cache(cache_path)?;
    check_alignment(&meta, &manifest)?;
    if cache.space != cfg.color_space {
        return Err(CliError::Input(format!(
            "cache holds {} features but the run asks for {}",
            cache.space, cfg.color_space
        )));
    }
    let input_hash = {
        let mut h = ContentHash::new();
        h.update("cache", &read(cache_path)?).update("manifest", &read(manifest_path)?);
        h.finish()
    };
    let labels = manifest.labels();
    let assignment = assign_folds(&manifest, cfg.protocol, cfg.seed)?;
    let test_folds: Vec<usize> = match cfg.protocol {
        Protocol::Holdout => vec![0],
        Protocol::Kfold5 => (0..5).collect(),
    };
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut folds = Vec::new();
    for &f in &test_folds {
        let members: Vec<usize> = (0..manifest.len()).filter(|&i| assignment[i] != f).collect();
        let (tr, va) = validation_split(&manifest, &members, fold_seed(cfg, 101, f))?;
        let provenance = serde_json::json!({
            "run_config": cfg.to_json(),
            "input_hash": input_hash,
            "test_fold": f,
            "n_train": tr.len(),
            "n_val": va.len(),
        });
        let dir = format!("fold{f}");
        let fold_dir = out.join(&dir);

        let (xtr, xva) = (select(&cache.scales, &tr), select(&cache.scales, &va));
        let (ytr, yva) = (pick(&labels, &tr), pick(&labels, &va));
        let train = ScaleData::new(xtr.each_ref(), &ytr)?;
        let val = ScaleData::new(xva.each_ref(), &yva)?;
        let mut model = train_cascade(&train, &val, &cfg.cascade(fold_seed(cfg, 102, f)))?;
        model.provenance = provenance.clone();
        model.save(&fold_dir)?;

        if cfg.gsm {
            let images = load_images(&manifest, &tr, cfg)?;
            let (scanners, gtr) = fit_gsm(&images, &ytr, &gsm_config(cfg, f))?;
            let gva = gsm_reps(&scanners, &load_images(&manifest, &va, cfg)?)?;
            let train = ScaleData::new(gtr.each_ref(), &ytr)?;
            let val = ScaleData::new(gva.each_ref(), &yva)?;
            let mut gsm_model = train_cascade(&train, &val, &cfg.cascade(fold_seed(cfg, 104, f)))?;
            gsm_model.provenance = provenance;
            scanners.save(fold_dir.join("gsm").join("scanners"))?;
            gsm_model.save(fold_dir.join("gsm").join("cascade"))?;
        }
        folds.push(FoldModel {
            fold: f,
            dir,
            n_train: tr.len(),
            n_val: va.len(),
            gsm: cfg.gsm,
        });
    }
    let run = RunModel {
        format: RUN_FORMAT.into(),
        version: 1,
        run_config: cfg.clone(),
        input_hash,
        assignment,
        folds,
    };
    write(&out.join(RUN_FILE), to_json_pretty(&run))?;
    Ok(run)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOutput {
    pub lbp: EvalReport,
    pub gsm: Option<EvalReport>,
}

fn fold_report(
    fold: usize,
    scores: &[f64],
    rows: &[usize],
    manifest: &DatasetManifest,
    aggregate: Aggregation,
    dev_threshold: f64,
) -> Result<FoldReport> {
    let mut samples = Vec::with_capacity(rows.len());
    for (&s, &i) in scores.iter().zip(rows) {
        let r = &manifest.records[i];
        let mut sample = ScoredSample::new(s, r.label)?;
        sample.group = r.group.clone();
        samples.push(sample);
    }
    if aggregate == Aggregation::Mean {
        samples = eval::aggregate_by_group(&samples)?;
    }
    Ok(FoldReport::compute(fold, &samples, dev_threshold)?)
}

/// Scores every test fold of a trained run and writes `report.json` and
/// `report.txt` (plus `gsm_report.*` when the baseline was trained).
pub fn cmd_eval(model_dir: &Path, cache_path: &Path, manifest_path: &Path, aggregate: Aggregation, out: &Path) -> Result<EvalOutput> {
    let run = RunModel::load(model_dir)?;
    let manifest = DatasetManifest::load(manifest_path)?;
    let (cache, meta) = load_cache(cache_path)?;
    check_alignment(&meta, &manifest)?;
    if run.assignment.len() != manifest.len() {
        return Err(CliError::Input("the model was trained on a different manifest".into()));
    }
    let cfg = RunConfig {
        aggregate,
        ..run.run_config.clone()
    };
    let input_hash = {
        let mut h = ContentHash::new();
        h.update("model", &read(&model_dir.join(RUN_FILE))?)
            .update("cache", &read(cache_path)?)
            .update("manifest", &read(manifest_path)?);
        h.finish()
    };
    let mut lbp_folds = Vec::new();
    let mut gsm_folds = Vec::new();
    for fm in &run.folds {
        let rows: Vec<usize> = (0..manifest.len()).filter(|&i| run.assignment[i] == fm.fold).collect();
        let cascade = CascadeModel::load(model_dir.join(&fm.dir))?;
        let scores = cascade.predict_scores(select(&cache.scales, &rows).each_ref())?;
        lbp_folds.push(fold_report(fm.fold, &scores, &rows, &manifest, aggregate, cascade.dev_threshold)?);
        if fm.gsm {
            let base = model_dir.join(&fm.dir).join("gsm");
            let scanners = GsmModel::load(base.join("scanners"))?;
            let gsm_cascade = CascadeModel::load(base.join("cascade"))?;
            let reps = gsm_reps(&scanners, &load_images(&manifest, &rows, &cfg)?)?;
            let scores = gsm_cascade.predict_scores(reps.each_ref())?;
            gsm_folds.push(fold_report(fm.fold, &scores, &rows, &manifest, aggregate, gsm_cascade.dev_threshold)?);
        }
    }
    let provenance = serde_json::json!({ "run_config": cfg.to_json(), "input_hash": input_hash });
    let protocol = cfg.protocol.to_string();
    let space = cfg.color_space.to_string();
    let agg = aggregate.to_string();
    let lbp = EvalReport::new(&protocol, &space, &agg, lbp_folds, provenance.clone());
    let gsm = (!gsm_folds.is_empty()).then(|| EvalReport::new(&protocol, &space, &agg, gsm_folds, provenance));
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    for (name, report) in [("report", Some(&lbp)), ("gsm_report", gsm.as_ref())] {
        if let Some(r) = report {
            write(&out.join(format!("{name}.json")), to_json_pretty(r))?;
            write(&out.join(format!("{name}.txt")), r.to_text())?;
        }
    }
    Ok(EvalOutput { lbp, gsm })
}

/// Spoof probability of one image under the cascade trained for `fold`.
pub fn cmd_score(model_dir: &Path, image: &Path, fold: usize) -> Result<f64> {
    let run = RunModel::load(model_dir)?;
    let cascade = run.cascade(model_dir, fold)?;
    let img = imagio::load_normalized(image, run.run_config.color_space)?;
    let reps = extract_all_scales(&img)?;
    Ok(cascade.predict_score(reps.each_ref().map(|r| r.values.as_slice()))?)
}

