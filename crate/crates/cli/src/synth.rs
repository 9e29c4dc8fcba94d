//! Synthetic genuine/spoof face-texture benchmark.
//!
//! A genuine image is smoothed colored noise over a per-subject tint and a
//! slow illumination field. Its spoof twin is the same signal after a
//! simulated recapture: mild blur, 8×8 DCT quantization and an additive
//! moiré grating.

use std::f32::consts::PI;
use std::path::Path;

use image::{imageops, Rgb, Rgb32FImage, RgbImage};
use lbpforest::eval::Label;
use lbpforest::seed;
use rand::Rng;
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::manifest::{DatasetManifest, Record};

/// Bumped whenever generated pixels change.
pub const GENERATOR_VERSION: u64 = 1;
pub const SIZE: u32 = 128;
/// Frames sharing one group id.
pub const FRAMES_PER_GROUP: usize = 5;

const JPEG_LUMA: [f32; 64] = [
    16., 11., 10., 16., 24., 40., 51., 61., 12., 12., 14., 19., 26., 58., 60., 55., 14., 13., 16.,
    24., 40., 57., 69., 56., 14., 17., 22., 29., 51., 87., 80., 62., 18., 22., 37., 56., 68., 109.,
    103., 77., 24., 35., 55., 64., 81., 104., 113., 92., 49., 64., 78., 87., 103., 121., 120.,
    101., 72., 92., 95., 98., 112., 100., 103., 99.,
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthSpec {
    pub generator_version: u64,
    pub per_class: usize,
    pub subjects: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(per_class: usize, seed: u64) -> Result<Self> {
        if per_class == 0 {
            return Err(CliError::Input("synth needs at least one image per class".into()));
        }
        Ok(SynthSpec {
            generator_version: GENERATOR_VERSION,
            per_class,
            subjects: (per_class / 10).max(per_class.min(4)),
            seed,
        })
    }

    pub fn subject_of(&self, i: usize) -> usize {
        i * self.subjects / self.per_class
    }

    /// First image index of `subject`.
    pub fn first_of(&self, subject: usize) -> usize {
        (subject * self.per_class).div_ceil(self.subjects)
    }
}

fn noise(rng: &mut impl Rng, amplitude: f32) -> f32 {
    (rng.gen::<f32>() - 0.5) * 2.0 * amplitude
}

/// The shared signal behind image `i`, as linear f32 RGB.
pub fn signal(spec: &SynthSpec, i: usize) -> Rgb32FImage {
    let subject = spec.subject_of(i) as u64;
    let mut tint_rng = seed::rng(seed::derive(spec.seed, &[GENERATOR_VERSION, 0, subject]));
    let tint: [f32; 3] = [
        tint_rng.gen_range(110.0..190.0),
        tint_rng.gen_range(80.0..150.0),
        tint_rng.gen_range(60.0..130.0),
    ];
    let mut rng = seed::rng(seed::derive(spec.seed, &[GENERATOR_VERSION, 1, i as u64]));
    let (fx, fy) = (rng.gen_range(0.5..2.0) / SIZE as f32, rng.gen_range(0.5..2.0) / SIZE as f32);
    let phase = rng.gen_range(0.0..2.0 * PI);
    let light = rng.gen_range(10.0..25.0);
    let mut raw = Rgb32FImage::new(SIZE, SIZE);
    for (x, y, p) in raw.enumerate_pixels_mut() {
        let shade = light * (2.0 * PI * (fx * x as f32 + fy * y as f32) + phase).sin();
        let luma = noise(&mut rng, 70.0);
        let mut px = [0.0; 3];
        for c in 0..3 {
            px[c] = tint[c] + shade + luma + noise(&mut rng, 35.0);
        }
        *p = Rgb(px);
    }
    imageops::blur(&raw, 0.9)
}

/// 8×8 orthonormal DCT-II basis, `basis[u][x]`.
fn dct_basis() -> [[f32; 8]; 8] {
    let mut b = [[0.0f32; 8]; 8];
    for (u, row) in b.iter_mut().enumerate() {
        let scale = if u == 0 { (1.0f32 / 8.0).sqrt() } else { (2.0f32 / 8.0).sqrt() };
        for (x, v) in row.iter_mut().enumerate() {
            *v = scale * ((2 * x + 1) as f32 * u as f32 * PI / 16.0).cos();
        }
    }
    b
}

/// Quantizes every 8×8 block of every channel with the scaled JPEG
/// luminance table.
fn dct_quantize(img: &mut Rgb32FImage, table_scale: f32) {
    let basis = dct_basis();
    let (w, h) = img.dimensions();
    for c in 0..3 {
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                let mut block = [[0.0f32; 8]; 8];
                for (y, row) in block.iter_mut().enumerate() {
                    for (x, v) in row.iter_mut().enumerate() {
                        *v = img.get_pixel(bx + x as u32, by + y as u32)[c] - 128.0;
                    }
                }
                let mut coef = [[0.0f32; 8]; 8];
                for u in 0..8 {
                    for v in 0..8 {
                        let mut s = 0.0;
                        for y in 0..8 {
                            for x in 0..8 {
                                s += basis[v][y] * basis[u][x] * block[y][x];
                            }
                        }
                        let q = JPEG_LUMA[v * 8 + u] * table_scale;
                        coef[v][u] = (s / q).round() * q;
                    }
                }
                for y in 0..8 {
                    for x in 0..8 {
                        let mut s = 0.0;
                        for v in 0..8 {
                            for u in 0..8 {
                                s += basis[v][y] * basis[u][x] * coef[v][u];
                            }
                        }
                        img.get_pixel_mut(bx + x as u32, by + y as u32)[c] = s + 128.0;
                    }
                }
            }
        }
    }
}

/// Simulated recapture of `signal` for image `i`.
pub fn recapture(spec: &SynthSpec, i: usize, signal: &Rgb32FImage) -> Rgb32FImage {
    let mut rng = seed::rng(seed::derive(spec.seed, &[GENERATOR_VERSION, 2, i as u64]));
    let mut img = imageops::blur(signal, rng.gen_range(0.8..1.2));
    dct_quantize(&mut img, rng.gen_range(0.8..1.4));
    let period = rng.gen_range(4.0f32..7.0);
    let angle = rng.gen_range(0.0..PI);
    let (kx, ky) = (angle.cos() * 2.0 * PI / period, angle.sin() * 2.0 * PI / period);
    let amplitude = rng.gen_range(6.0..10.0);
    let phases = [0.0, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)];
    for (x, y, p) in img.enumerate_pixels_mut() {
        let t = kx * x as f32 + ky * y as f32;
        for c in 0..3 {
            p[c] += amplitude * (t + phases[c]).sin();
        }
    }
    img
}

fn quantize(img: &Rgb32FImage) -> RgbImage {
    RgbImage::from_fn(img.width(), img.height(), |x, y| {
        Rgb(img.get_pixel(x, y).0.map(|v| v.round().clamp(0.0, 255.0) as u8))
    })
}

/// Genuine and spoof versions of image `i`.
pub fn pair(spec: &SynthSpec, i: usize) -> (RgbImage, RgbImage) {
    let s = signal(spec, i);
    (quantize(&s), quantize(&recapture(spec, i, &s)))
}

/// Writes `images/*.png`, `manifest.csv` and `synth.json` under `out`.
pub fn generate(out: &Path, per_class: usize, seed: u64) -> Result<DatasetManifest> {
    use rayon::prelude::*;

    let spec = SynthSpec::new(per_class, seed)?;
    let images = out.join("images");
    std::fs::create_dir_all(&images).map_err(|e| CliError::io(&images, e))?;
    let records: Vec<[Record; 2]> = (0..per_class)
        .into_par_iter()
        .map(|i| {
            let (genuine, spoof) = pair(&spec, i);
            let subject = format!("subj{:03}", spec.subject_of(i));
            let within = i - spec.first_of(spec.subject_of(i));
            let mut pair_records = Vec::with_capacity(2);
            for (label, img) in [(Label::Genuine, genuine), (Label::Spoof, spoof)] {
                let rel = format!("images/{label}_{i:04}.png");
                let path = out.join(&rel);
                img.save(&path)
                    .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
                pair_records.push(Record {
                    path: rel,
                    label,
                    subject: subject.clone(),
                    group: Some(format!("{subject}-{label}-v{}", within / FRAMES_PER_GROUP)),
                    fold: None,
                });
            }
            Ok(pair_records.try_into().expect("two records"))
        })
        .collect::<Result<_>>()?;
    let records: Vec<Record> = records.into_iter().flatten().collect();
    let manifest_path = out.join("manifest.csv");
    let file = std::fs::File::create(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    DatasetManifest::write_csv(&records, file).map_err(|e| CliError::io(&manifest_path, e))?;
    let spec_path = out.join("synth.json");
    let text = serde_json::to_string_pretty(&spec).expect("spec serializes");
    std::fs::write(&spec_path, text).map_err(|e| CliError::io(&spec_path, e))?;
    DatasetManifest::load(&manifest_path)
}
