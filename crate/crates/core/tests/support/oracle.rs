//! Brute-force scalar LBP reference used by tests.
//!
//! Written without reference to the library code path: neighbors are sampled
//! with the four-weight bilinear formula, uniformity is decided by walking
//! the bit string, and bin indices come from a full enumeration of all
//! `2^P` patterns.
#![allow(dead_code)]

use std::sync::OnceLock;

/// Counts 0/1 changes walking once around the circular bit string.
pub fn is_uniform(pattern: u32, p: u32) -> bool {
    let bits: Vec<u32> = (0..p).map(|i| (pattern >> i) & 1).collect();
    let mut changes = 0;
    for i in 0..p as usize {
        if bits[i] != bits[(i + 1) % p as usize] {
            changes += 1;
        }
    }
    changes <= 2
}

fn index_table(p: u32) -> &'static [u16] {
    static TABLES: [OnceLock<Vec<u16>>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    let slot = match p {
        8 => 0,
        16 => 1,
        24 => 2,
        _ => panic!("oracle supports P = 8, 16, 24"),
    };
    TABLES[slot].get_or_init(|| {
        let n_uniform = (p * (p - 1) + 2) as u16;
        let mut next = 0u16;
        (0..1u32 << p)
            .map(|v| {
                if is_uniform(v, p) {
                    next += 1;
                    next - 1
                } else {
                    n_uniform
                }
            })
            .collect()
    })
}

/// u2 bin of a raw pattern.
pub fn u2_bin(pattern: u32, p: u32) -> usize {
    index_table(p)[pattern as usize] as usize
}

/// Per-pixel bin index (`None` within `R` of the border).
pub fn codes(plane: &[u8], w: usize, h: usize, p: u32, r: u32) -> Vec<Option<usize>> {
    let r_us = r as usize;
    let snap = |v: f64| if (v - v.round()).abs() < 1e-6 { v.round() } else { v };
    let mut out = vec![None; w * h];
    for cy in 0..h {
        for cx in 0..w {
            if cx < r_us || cy < r_us || cx + r_us >= w || cy + r_us >= h {
                continue;
            }
            let center = plane[cy * w + cx] as f64;
            let mut pattern = 0u32;
            for n in 1..=p {
                let angle = 2.0 * std::f64::consts::PI * (n - 1) as f64 / p as f64;
                let sx = cx as f64 + snap(r as f64 * angle.cos());
                let sy = cy as f64 + snap(-(r as f64) * angle.sin());
                let x0 = sx.floor();
                let y0 = sy.floor();
                let ax = sx - x0;
                let ay = sy - y0;
                let px = |x: f64, y: f64| -> f64 {
                    if x < 0.0 || y < 0.0 || x >= w as f64 || y >= h as f64 {
                        // Only reached with a zero weight.
                        return 0.0;
                    }
                    plane[y as usize * w + x as usize] as f64 - center
                };
                let value = (1.0 - ax) * (1.0 - ay) * px(x0, y0)
                    + ax * (1.0 - ay) * px(x0 + 1.0, y0)
                    + (1.0 - ax) * ay * px(x0, y0 + 1.0)
                    + ax * ay * px(x0 + 1.0, y0 + 1.0);
                let sign = if value >= 0.0 { 1 } else { 0 };
                pattern += sign * (1u32 << (n - 1));
            }
            out[cy * w + cx] = Some(u2_bin(pattern, p));
        }
    }
    out
}

/// Count-then-normalize histogram over a rectangle of oracle codes.
pub fn histogram(
    codes: &[Option<usize>],
    w: usize,
    x: usize,
    y: usize,
    rw: usize,
    rh: usize,
    bins: usize,
) -> Vec<f64> {
    let mut counts = vec![0usize; bins];
    for yy in y..y + rh {
        for xx in x..x + rw {
            if let Some(c) = codes[yy * w + xx] {
                counts[c] += 1;
            }
        }
    }
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .map(|&c| if total == 0 { 0.0 } else { c as f64 / total as f64 })
        .collect()
}

/// EER by brute force: FAR and FRR are recounted from scratch at every
/// distinct score and just above the largest one, and the first sign change
/// of FAR - FRR is interpolated linearly. Returns `(rate, threshold)`.
pub fn eer_sweep(genuine: &[f64], spoof: &[f64]) -> (f64, f64) {
    let mut ts: Vec<f64> = genuine.iter().chain(spoof).copied().collect();
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ts.dedup();
    ts.push(ts[ts.len() - 1].next_up());
    let rates = |t: f64| {
        let far = spoof.iter().filter(|&&s| s < t).count() as f64 / spoof.len() as f64;
        let frr = genuine.iter().filter(|&&s| s >= t).count() as f64 / genuine.len() as f64;
        (far, frr)
    };
    let mut prev: Option<(f64, f64, f64)> = None;
    for &t in &ts {
        let (far, frr) = rates(t);
        if far == frr {
            return (far, t);
        }
        if far > frr {
            let Some((pt, pfar, pfrr)) = prev else {
                return (far, t);
            };
            let a = (pfrr - pfar) / ((far - pfar) - (frr - pfrr));
            return (pfar + a * (far - pfar), pt + a * (t - pt));
        }
        prev = Some((t, far, frr));
    }
    unreachable!("FAR reaches 1 above the largest score")
}
