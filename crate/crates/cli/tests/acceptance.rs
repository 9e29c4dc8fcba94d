//! Acceptance suite: one numbered check per criterion, each printed as a
//! PASS/FAIL line. Runs as a plain binary so the lines always reach the
//! console; exits non-zero when any check fails.

#[path = "../../core/tests/support/oracle.rs"]
mod oracle;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::Instant;

use lbpforest::cascade::{layer_input, scale_for_layer, CascadeConfig, CascadeTrainer, ScaleData};
use lbpforest::eval::{self, Label, ScoredSample};
use lbpforest::features::gsm::{representation_len, GsmModel, GSM_GRIDS};
use lbpforest::features::{extract_all_scales, Scale};
use lbpforest::forest::{train_completely_random_forest, train_random_forest};
use lbpforest::imagio::{self, ColorSpace, Image};
use lbpforest::lbp::{build_u2_map, lbp_codes, LbpConfig};
use lbpforest::{seed, Matrix};
use lbpforest_cli::pipeline::{self, RunModel};
use lbpforest_cli::{synth, Aggregation, Protocol, RunConfig};
use rand::Rng;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn random_image(rng: &mut impl Rng, lo: u8, hi: u8) -> Image {
    let px: Vec<u8> = (0..128 * 128 * 3).map(|_| rng.gen_range(lo..=hi)).collect();
    Image::from_interleaved(128, 128, ColorSpace::Rgb, &px).unwrap()
}

fn c1_feature_lengths() -> Check {
    let mut rng = seed::rng(1);
    let bins: Vec<usize> = Scale::ALL.iter().map(|s| s.bins()).collect();
    ensure!(bins == [59, 243, 555], "per-channel bins {bins:?}");
    let mut slowest = 0.0f64;
    for space in [ColorSpace::Rgb, ColorSpace::Hsv, ColorSpace::YCbCr] {
        let img = imagio::convert(&random_image(&mut rng, 0, 255), space).map_err(|e| e.to_string())?;
        let t = Instant::now();
        let reps = extract_all_scales(&img).map_err(|e| e.to_string())?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        let lens: Vec<usize> = reps.iter().map(|r| r.values.len()).collect();
        ensure!(lens == [8673, 35721, 81585], "{space}: lengths {lens:?}");
        ensure!(lens == [49 * 59 * 3, 49 * 243 * 3, 49 * 555 * 3], "49 × bins × 3");
    }
    ensure!(slowest < 1.0, "extraction took {slowest:.3} s");
    Ok(format!("8673/35721/81585, bins 59/243/555, slowest extraction {slowest:.3} s"))
}

fn c2_lbp_oracle() -> Check {
    let mut rng = seed::rng(2);
    let configs = [(8, 1), (16, 2), (24, 3)];
    let mut compared = 0usize;
    for _ in 0..100 {
        let plane: Vec<u8> = (0..16 * 16).map(|_| rng.gen()).collect();
        for &(p, r) in &configs {
            let cfg = LbpConfig::new(p, r).map_err(|e| e.to_string())?;
            let codes = lbp_codes(&plane, 16, 16, &cfg).map_err(|e| e.to_string())?;
            let want = oracle::codes(&plane, 16, 16, p, r);
            for y in 0..16 {
                for x in 0..16 {
                    ensure!(codes.code(x, y) == want[y * 16 + x], "P={p} R={r} pixel ({x},{y})");
                    compared += 1;
                }
            }
        }
    }
    Ok(format!("{compared} pixels bit-exact over 100 planes × 3 configs"))
}

fn c3_uniform_combinatorics() -> Check {
    for p in [8u32, 16] {
        let map = build_u2_map(p).map_err(|e| e.to_string())?;
        let enumerated = (0..1u32 << p).filter(|&v| oracle::is_uniform(v, p)).count();
        let closed = (p * (p - 1) + 2) as usize;
        ensure!(enumerated == closed, "P={p}: enumerated {enumerated}, closed form {closed}");
        ensure!(map.uniform_patterns().len() == closed, "P={p}: map lists {}", map.uniform_patterns().len());
        for v in 0..1u32 << p {
            let uniform = map.bin(v) != map.non_uniform_bin();
            ensure!(uniform == oracle::is_uniform(v, p), "P={p}: pattern {v:#x}");
        }
    }
    let map = build_u2_map(24).map_err(|e| e.to_string())?;
    ensure!(24 * 23 + 2 == 554 && map.uniform_patterns().len() == 554, "P=24 closed form");
    ensure!(map.bins() == 555, "P=24 bins {}", map.bins());
    let mut rng = seed::rng(3);
    let mut uniform_hits = 0usize;
    for i in 0..1_000_000u32 {
        // Half random words, half drawn from the uniform list so both
        // branches are exercised.
        let v = if i % 2 == 0 {
            rng.gen::<u32>() & 0xFF_FFFF
        } else {
            map.uniform_patterns()[rng.gen_range(0..554)]
        };
        let uniform = map.bin(v) != map.non_uniform_bin();
        ensure!(uniform == oracle::is_uniform(v, 24), "P=24: pattern {v:#x}");
        uniform_hits += uniform as usize;
    }
    Ok(format!("58 and 242 by enumeration, 554 closed form, 10^6 P=24 samples agree ({uniform_hits} uniform)"))
}

fn c4_gray_shift() -> Check {
    let mut rng = seed::rng(4);
    for i in 0..50 {
        let img = random_image(&mut rng, 20, 200);
        let offset: u8 = rng.gen_range(1..=55);
        let shifted_px: Vec<u8> = img.to_interleaved().iter().map(|v| v + offset).collect();
        let shifted = Image::from_interleaved(128, 128, ColorSpace::Rgb, &shifted_px).unwrap();
        let a = extract_all_scales(&img).map_err(|e| e.to_string())?;
        let b = extract_all_scales(&shifted).map_err(|e| e.to_string())?;
        for s in 0..3 {
            let same = a[s].values.iter().zip(&b[s].values).all(|(x, y)| x.to_bits() == y.to_bits());
            ensure!(same, "image {i}, offset {offset}, scale S{}", s + 1);
        }
    }
    Ok("50 images, all three scales bit-identical".into())
}

fn labelled(genuine: &[f64], spoof: &[f64]) -> Vec<ScoredSample> {
    genuine
        .iter()
        .map(|&s| ScoredSample::new(s, Label::Genuine).unwrap())
        .chain(spoof.iter().map(|&s| ScoredSample::new(s, Label::Spoof).unwrap()))
        .collect()
}

fn c5_eer_oracle() -> Check {
    let mut rng = seed::rng(5);
    let mut worst = 0.0f64;
    for set in 0..1000 {
        let levels = if set % 2 == 0 { 10 } else { 1000 };
        let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| rng.gen_range(0..=levels) as f64 / levels as f64).collect() };
        let ng = 1 + set % 37;
        let ns = 1 + (set * 7) % 29;
        let (g, s) = (draw(ng), draw(ns));
        let got = eval::eer(&labelled(&g, &s)).map_err(|e| e.to_string())?;
        let want = oracle::eer_sweep(&g, &s);
        let err = (got.0 - want.0).abs().max((got.1 - want.1).abs());
        worst = worst.max(err);
        ensure!(err <= 1e-12, "set {set}: {got:?} vs {want:?}");
    }
    let perfect = eval::eer(&labelled(&[0.0, 0.1], &[0.9, 1.0])).unwrap().0;
    ensure!(perfect == 0.0, "perfect separation gives {perfect}");
    let flat = eval::eer(&labelled(&[0.5; 6], &[0.5; 9])).unwrap().0;
    ensure!(flat == 0.5, "identical scores give {flat}");
    Ok(format!("1000 sets, worst deviation {worst:.1e}; separated 0, identical 0.5"))
}

fn toy_scales(n: usize, widths: [usize; 3], rng: &mut impl Rng) -> ([Matrix; 3], Vec<u8>) {
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let scales = widths.map(|w| {
        let rows: Vec<Vec<f32>> = labels
            .iter()
            .map(|&l| (0..w).map(|j| rng.gen::<f32>() + if j % 3 == 0 { 0.7 * l as f32 } else { 0.0 }).collect())
            .collect();
        Matrix::from_rows(&rows).unwrap()
    });
    (scales, labels)
}

fn c6_cascade_schedule() -> Check {
    let mut rng = seed::rng(6);
    let (train, ytr) = toy_scales(36, [5, 7, 9], &mut rng);
    let (val, yva) = toy_scales(14, [5, 7, 9], &mut rng);
    let tr = ScaleData::new(train.each_ref(), &ytr).map_err(|e| e.to_string())?;
    let va = ScaleData::new(val.each_ref(), &yva).map_err(|e| e.to_string())?;
    let cfg = CascadeConfig {
        n_trees: 5,
        folds: 3,
        patience: 2,
        max_layers: 12,
        max_depth: None,
        seed: 6,
    };
    let (model, trace) = CascadeTrainer::new(cfg.clone())
        .with_accuracy_script(vec![0.80, 0.90, 0.90, 0.90, 0.95, 0.99])
        .train(&tr, &va)
        .map_err(|e| e.to_string())?;
    ensure!(model.layers.len() == 4, "stopped after {} layers", model.layers.len());
    ensure!(model.best_layer == 2, "best layer {}", model.best_layer);
    for (layer, t) in model.layers.iter().zip(&trace.layers) {
        ensure!(layer.scale == (layer.index - 1) % 3 + 1, "layer {} scale {}", layer.index, layer.scale);
        for (slot, folds) in t.folds.iter().enumerate() {
            let mut predicted = vec![0usize; ytr.len()];
            for rec in folds {
                for s in &rec.held_out {
                    ensure!(!rec.train.contains(s), "layer {} forest {slot}: sample {s} leaks", layer.index);
                    predicted[*s] += 1;
                }
            }
            ensure!(predicted.iter().all(|&c| c == 1), "layer {} forest {slot}: coverage", layer.index);
        }
    }
    let long = CascadeConfig {
        patience: 20,
        max_layers: 9,
        ..cfg
    };
    let rising: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
    let (model9, _) = CascadeTrainer::new(long)
        .with_accuracy_script(rising)
        .train(&tr, &va)
        .map_err(|e| e.to_string())?;
    ensure!(model9.layers.len() == 9, "capped run has {} layers", model9.layers.len());
    for l in &model9.layers {
        ensure!(l.scale == scale_for_layer(l.index) && l.scale == (l.index - 1) % 3 + 1, "layer {}", l.index);
    }
    Ok("stop after layer 4, best layer 2, schedule 1,2,3,1.. over 9 layers, no leakage".into())
}

fn files_under(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

struct PipelineRun {
    cache: Vec<u8>,
    model: Vec<(String, Vec<u8>)>,
    report: Vec<u8>,
    eer: f64,
}

fn full_pipeline(root: &Path, per_class: usize, cfg: &RunConfig) -> Result<PipelineRun, String> {
    let data = root.join("data");
    synth::generate(&data, per_class, 7).map_err(|e| e.to_string())?;
    let manifest = data.join("manifest.csv");
    let cache = root.join("features.lbpf");
    pipeline::cmd_extract(&manifest, cfg, &cache).map_err(|e| e.to_string())?;
    pipeline::cmd_train(&cache, &manifest, cfg, &root.join("model")).map_err(|e| e.to_string())?;
    let out = pipeline::cmd_eval(&root.join("model"), &cache, &manifest, cfg.aggregate, &root.join("report"))
        .map_err(|e| e.to_string())?;
    Ok(PipelineRun {
        cache: std::fs::read(&cache).unwrap(),
        model: files_under(&root.join("model")),
        report: std::fs::read(root.join("report").join("report.json")).unwrap(),
        eer: out.lbp.eer.mean,
    })
}

fn c7_determinism() -> Check {
    let cfg = RunConfig {
        trees: 12,
        seed: 11,
        gsm: true,
        gsm_max_patches: 400,
        ..RunConfig::default()
    };
    let mut runs = Vec::new();
    for workers in [1, 3] {
        let dir = tempfile::tempdir().unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().unwrap();
        runs.push(pool.install(|| full_pipeline(dir.path(), 24, &cfg))?);
    }
    let (a, b) = (&runs[0], &runs[1]);
    ensure!(a.cache == b.cache, "feature caches differ");
    ensure!(a.model.len() == b.model.len(), "model file lists differ");
    for ((na, ba), (nb, bb)) in a.model.iter().zip(&b.model) {
        ensure!(na == nb && ba == bb, "model file {na} differs");
    }
    ensure!(a.report == b.report, "reports differ");
    ensure!(a.eer.to_bits() == b.eer.to_bits(), "EER {} vs {}", a.eer, b.eer);
    Ok(format!("{} model files identical with 1 and 3 workers, EER {:.4}", a.model.len(), a.eer))
}

fn benchmark_config(gsm: bool) -> RunConfig {
    RunConfig {
        color_space: ColorSpace::Hsv,
        trees: 64,
        seed: 7,
        protocol: Protocol::Holdout,
        aggregate: Aggregation::Frame,
        gsm,
        ..RunConfig::default()
    }
}

fn c8_benchmark() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let t = Instant::now();
    let run = full_pipeline(dir.path(), 200, &benchmark_config(false))?;
    let secs = t.elapsed().as_secs_f64();
    let model = RunModel::load(&dir.path().join("model")).map_err(|e| e.to_string())?;
    let test_rows = model.assignment.iter().filter(|&&f| f == 0).count();
    ensure!(test_rows * 2 == model.assignment.len(), "holdout test share {test_rows}/{}", model.assignment.len());
    ensure!(run.eer <= 0.05, "EER {:.4} above 5%", run.eer);
    ensure!(secs <= 600.0, "took {secs:.0} s");
    Ok(format!("EER {:.2}% on {test_rows} test images in {secs:.1} s", 100.0 * run.eer))
}

fn c9_gsm_baseline() -> Check {
    let lens = GSM_GRIDS.map(representation_len);
    ensure!(lens == [900, 196, 36], "lengths {lens:?}");
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    synth::generate(&data, 200, 7).map_err(|e| e.to_string())?;
    let manifest = data.join("manifest.csv");
    let cache = dir.path().join("features.lbpf");
    let cfg = benchmark_config(true);
    pipeline::cmd_extract(&manifest, &cfg, &cache).map_err(|e| e.to_string())?;
    let model_dir = dir.path().join("model");
    pipeline::cmd_train(&cache, &manifest, &cfg, &model_dir).map_err(|e| e.to_string())?;
    let out = pipeline::cmd_eval(&model_dir, &cache, &manifest, cfg.aggregate, &dir.path().join("report"))
        .map_err(|e| e.to_string())?;
    let scanners = GsmModel::load(model_dir.join("fold0").join("gsm").join("scanners")).map_err(|e| e.to_string())?;
    let img = imagio::load_normalized(data.join("images/genuine_0000.png"), cfg.color_space).map_err(|e| e.to_string())?;
    let rep = scanners.represent(&img).map_err(|e| e.to_string())?;
    let got = rep.each_ref().map(|r| r.len());
    ensure!(got == [900, 196, 36], "represented lengths {got:?}");
    let gsm = out.gsm.ok_or("no baseline report")?;
    let (lbp_eer, gsm_eer) = (out.lbp.eer.mean, gsm.eer.mean);
    ensure!(lbp_eer <= gsm_eer, "LBP EER {lbp_eer:.4} above baseline {gsm_eer:.4}");
    Ok(format!("900/196/36; EER LBP {:.2}% <= baseline {:.2}%", 100.0 * lbp_eer, 100.0 * gsm_eer))
}

fn c10_simplex() -> Check {
    let mut rng = seed::rng(10);
    let x = Matrix::from_rows(
        &(0..200).map(|_| (0..10).map(|_| rng.gen::<f32>()).collect::<Vec<_>>()).collect::<Vec<_>>(),
    )
    .unwrap();
    let y: Vec<u8> = (0..200).map(|i| (x.get(i, 0) + x.get(i, 3) > 1.0) as u8).collect();
    let rf = train_random_forest(&x, &y, 25, 1).map_err(|e| e.to_string())?;
    let crf = train_completely_random_forest(&x, &y, 25, 2).map_err(|e| e.to_string())?;
    let mut checked = 0usize;
    let mut worst = 0.0f64;
    for _ in 0..4000 {
        let q: Vec<f32> = (0..10).map(|_| rng.gen_range(-0.5..1.5)).collect();
        for f in [&rf, &crf] {
            let p = f.predict_proba(&q).map_err(|e| e.to_string())?;
            ensure!(p.iter().all(|v| (0.0..=1.0).contains(v)), "component outside [0, 1]: {p:?}");
            worst = worst.max((p[0] + p[1] - 1.0).abs());
            checked += 1;
        }
    }
    let (train, ytr) = toy_scales(40, [6, 8, 10], &mut rng);
    let (val, yva) = toy_scales(16, [6, 8, 10], &mut rng);
    let tr = ScaleData::new(train.each_ref(), &ytr).unwrap();
    let va = ScaleData::new(val.each_ref(), &yva).unwrap();
    let cfg = CascadeConfig {
        n_trees: 8,
        folds: 3,
        patience: 2,
        max_layers: 6,
        max_depth: None,
        seed: 10,
    };
    let model = lbpforest::cascade::train_cascade(&tr, &va, &cfg).map_err(|e| e.to_string())?;
    for _ in 0..2000 {
        let sample: Vec<Vec<f32>> = [6, 8, 10].iter().map(|&w| (0..w).map(|_| rng.gen_range(-0.5..2.0)).collect()).collect();
        let scales = [&sample[0][..], &sample[1][..], &sample[2][..]];
        // Replay the forward pass to recover the full class vector.
        let mut aug: Option<Vec<f32>> = None;
        let mut class = [0.0f64; 2];
        for layer in &model.layers[..model.best_layer] {
            let input = layer_input(layer.index, scales, aug.as_deref()).map_err(|e| e.to_string())?;
            let mut next = Vec::new();
            class = [0.0; 2];
            for f in &layer.forests {
                let p = f.predict_proba(&input).map_err(|e| e.to_string())?;
                next.extend([p[0] as f32, p[1] as f32]);
                class[0] += p[0] / layer.forests.len() as f64;
                class[1] += p[1] / layer.forests.len() as f64;
            }
            aug = Some(next);
        }
        let score = model.predict_score(scales).map_err(|e| e.to_string())?;
        ensure!((score - class[1]).abs() <= 1e-12, "score {score} vs replay {}", class[1]);
        worst = worst.max((class[0] + class[1] - 1.0).abs());
        checked += 1;
    }
    ensure!(checked == 10_000, "checked {checked}");
    ensure!(worst <= 1e-9, "worst simplex deviation {worst:e}");
    Ok(format!("{checked} predictions, worst |sum - 1| = {worst:.1e}"))
}

fn main() {
    let checks: [(u32, &str, fn() -> Check); 10] = [
        (1, "feature-length exactness", c1_feature_lengths),
        (2, "LBP oracle equivalence", c2_lbp_oracle),
        (3, "uniform-pattern combinatorics", c3_uniform_combinatorics),
        (4, "gray-shift invariance", c4_gray_shift),
        (5, "EER oracle", c5_eer_oracle),
        (6, "cascade schedule and stopping", c6_cascade_schedule),
        (7, "determinism", c7_determinism),
        (8, "synthetic end-to-end benchmark", c8_benchmark),
        (9, "grained-scanning baseline", c9_gsm_baseline),
        (10, "probability simplex", c10_simplex),
    ];
    let mut failed = 0;
    for (id, name, check) in checks {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id:>2} {name}: {detail} [{secs:.1} s]"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id:>2} {name}: {detail} [{secs:.1} s]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
