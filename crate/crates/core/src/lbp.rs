//! Circular uniform local binary patterns on a single 8-bit plane.
//!
//! For a center pixel `c` and `P` neighbors `r_1..r_P` sampled on a circle
//! of radius `R`, the raw code is `sum_n [r_n - c >= 0] << (n - 1)`. Neighbor
//! `n = 1` sits at angle 0 (to the right of the center) and the rest follow
//! counter-clockwise, so bit `n - 1` and bit `n` are circular neighbors.
//! Non-integer sample positions are bilinearly interpolated.
//!
//! Raw codes are folded through the u2 mapping: patterns with at most two
//! 0/1 transitions around the circle get their own bin (ordered by raw
//! value), everything else shares the final bin.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Number of circular 0/1 transitions in a `p`-bit pattern.
#[inline]
pub fn transitions(pattern: u32, p: u32) -> u32 {
    let mask = if p == 32 { u32::MAX } else { (1u32 << p) - 1 };
    let pattern = pattern & mask;
    let rotated = (pattern >> 1) | ((pattern & 1) << (p - 1));
    (pattern ^ rotated).count_ones()
}

/// Circular left rotation within the low `p` bits.
#[inline]
fn rotate_left(pattern: u32, by: u32, p: u32) -> u32 {
    let full = (1u32 << p) - 1;
    if by.is_multiple_of(p) {
        return pattern & full;
    }
    let by = by % p;
    ((pattern << by) | (pattern >> (p - by))) & full
}

/// Total histogram length for `p` neighbors: `P(P-1) + 3`.
pub const fn bin_count(p: u32) -> usize {
    (p * (p - 1) + 3) as usize
}

/// Pattern-to-bin table for the u2 mapping.
///
/// Uniform patterns are kept as a sorted list rather than a dense `2^P`
/// table; for `P = 24` the dense table would be 32 MiB per configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct U2Map {
    p: u32,
    uniform: Vec<u32>,
}

impl U2Map {
    pub fn neighbors(&self) -> u32 {
        self.p
    }

    pub fn bins(&self) -> usize {
        bin_count(self.p)
    }

    /// Index of the shared non-uniform bin (always the last one).
    pub fn non_uniform_bin(&self) -> usize {
        self.uniform.len()
    }

    /// Uniform patterns in ascending raw value; position = bin index.
    pub fn uniform_patterns(&self) -> &[u32] {
        &self.uniform
    }

    #[inline]
    pub fn bin(&self, pattern: u32) -> usize {
        if transitions(pattern, self.p) > 2 {
            return self.non_uniform_bin();
        }
        match self.uniform.binary_search(&pattern) {
            Ok(i) => i,
            Err(_) => self.non_uniform_bin(),
        }
    }
}

/// Builds the u2 mapping for `p ∈ {8, 16, 24}`.
pub fn build_u2_map(p: u32) -> Result<U2Map> {
    if !matches!(p, 8 | 16 | 24) {
        return Err(Error::invalid(format!(
            "unsupported neighbor count {p}; expected 8, 16 or 24"
        )));
    }
    let full = (1u32 << p) - 1;
    // Every uniform pattern is empty, full, or a single circular run of
    // `len` ones starting at bit `start`.
    let mut uniform = vec![0, full];
    for len in 1..p {
        let run = (1u32 << len) - 1;
        for start in 0..p {
            uniform.push(rotate_left(run, start, p));
        }
    }
    uniform.sort_unstable();
    uniform.dedup();
    debug_assert_eq!(uniform.len(), (p * (p - 1) + 2) as usize);
    Ok(U2Map { p, uniform })
}

/// Descriptor parameters `(P, R)` with their u2 mapping.
#[derive(Debug, Clone, PartialEq)]
pub struct LbpConfig {
    radius: u32,
    map: U2Map,
    offsets: Vec<SampleOffset>,
}

/// A neighbor position relative to the center, split into the integer
/// corner and the bilinear fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
struct SampleOffset {
    dx: isize,
    dy: isize,
    fx: f64,
    fy: f64,
}

fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

impl LbpConfig {
    /// `p ∈ {8, 16, 24}`, `radius ∈ {1, 2, 3}`.
    pub fn new(p: u32, radius: u32) -> Result<Self> {
        if !(1..=3).contains(&radius) {
            return Err(Error::invalid(format!(
                "unsupported radius {radius}; expected 1, 2 or 3"
            )));
        }
        let map = build_u2_map(p)?;
        let offsets = (0..p)
            .map(|n| {
                let theta = 2.0 * PI * n as f64 / p as f64;
                // Image rows grow downwards, so counter-clockwise means -y.
                let x = snap(radius as f64 * theta.cos());
                let y = snap(-(radius as f64) * theta.sin());
                let (x0, y0) = (x.floor(), y.floor());
                SampleOffset {
                    dx: x0 as isize,
                    dy: y0 as isize,
                    fx: x - x0,
                    fy: y - y0,
                }
            })
            .collect();
        Ok(LbpConfig {
            radius,
            map,
            offsets,
        })
    }

    pub fn neighbors(&self) -> u32 {
        self.map.neighbors()
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Border width excluded from the code map, `ceil(R)`.
    pub fn margin(&self) -> usize {
        self.radius as usize
    }

    pub fn bins(&self) -> usize {
        self.map.bins()
    }

    pub fn map(&self) -> &U2Map {
        &self.map
    }
}

/// Per-pixel u2 bin indices for one plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeMap {
    width: usize,
    height: usize,
    margin: usize,
    bins: usize,
    codes: Vec<u16>,
}

impl CodeMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        x >= self.margin
            && y >= self.margin
            && x + self.margin < self.width
            && y + self.margin < self.height
    }

    /// Bin index at `(x, y)`, or `None` inside the border margin.
    #[inline]
    pub fn code(&self, x: usize, y: usize) -> Option<usize> {
        self.is_valid(x, y)
            .then(|| self.codes[y * self.width + x] as usize)
    }

    pub fn valid_count(&self) -> usize {
        self.width.saturating_sub(2 * self.margin) * self.height.saturating_sub(2 * self.margin)
    }
}

/// Computes the u2 code of every pixel at least `ceil(R)` from the border.
pub fn lbp_codes(plane: &[u8], width: usize, height: usize, cfg: &LbpConfig) -> Result<CodeMap> {
    if plane.len() != width * height {
        return Err(Error::DimensionMismatch {
            expected: width * height,
            got: plane.len(),
        });
    }
    let m = cfg.margin();
    if width < 2 * m + 1 || height < 2 * m + 1 {
        return Err(Error::invalid(format!(
            "{width}×{height} plane is too small for radius {}",
            cfg.radius
        )));
    }
    let mut codes = vec![0u16; width * height];
    let at = |x: isize, y: isize| plane[y as usize * width + x as usize] as f64;
    for y in m..height - m {
        for x in m..width - m {
            let center = plane[y * width + x] as f64;
            let (xi, yi) = (x as isize, y as isize);
            let mut pattern = 0u32;
            for (bit, o) in cfg.offsets.iter().enumerate() {
                let x0 = xi + o.dx;
                let y0 = yi + o.dy;
                let x1 = if o.fx > 0.0 { x0 + 1 } else { x0 };
                let y1 = if o.fy > 0.0 { y0 + 1 } else { y0 };
                // Interpolating differences from the center keeps the result
                // exact under a constant intensity shift.
                let d00 = at(x0, y0) - center;
                let d10 = at(x1, y0) - center;
                let d01 = at(x0, y1) - center;
                let d11 = at(x1, y1) - center;
                let top = d00 + o.fx * (d10 - d00);
                let bottom = d01 + o.fx * (d11 - d01);
                let diff = top + o.fy * (bottom - top);
                if diff >= 0.0 {
                    pattern |= 1 << bit;
                }
            }
            codes[y * width + x] = cfg.map.bin(pattern) as u16;
        }
    }
    Ok(CodeMap {
        width,
        height,
        margin: m,
        bins: cfg.bins(),
        codes,
    })
}

/// Axis-aligned pixel rectangle `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

/// Raw bin counts of the valid codes inside `region`.
pub fn region_counts(codes: &CodeMap, region: Region) -> Result<Vec<u32>> {
    if region.x + region.w > codes.width || region.y + region.h > codes.height {
        return Err(Error::invalid(format!(
            "region {region:?} exceeds {}×{} plane",
            codes.width, codes.height
        )));
    }
    let mut counts = vec![0u32; codes.bins];
    let m = codes.margin;
    let x_lo = region.x.max(m);
    let x_hi = (region.x + region.w).min(codes.width.saturating_sub(m));
    let y_lo = region.y.max(m);
    let y_hi = (region.y + region.h).min(codes.height.saturating_sub(m));
    for y in y_lo..y_hi {
        let row = &codes.codes[y * codes.width..(y + 1) * codes.width];
        for &c in &row[x_lo.min(x_hi)..x_hi] {
            counts[c as usize] += 1;
        }
    }
    Ok(counts)
}

/// L1-normalized u2 histogram of `region`; all zeros if the region holds no
/// valid code.
pub fn region_histogram(codes: &CodeMap, region: Region, bins: usize) -> Result<Vec<f64>> {
    if bins != codes.bins {
        return Err(Error::DimensionMismatch {
            expected: codes.bins,
            got: bins,
        });
    }
    let counts = region_counts(codes, region)?;
    let total: u32 = counts.iter().sum();
    if total == 0 {
        return Ok(vec![0.0; bins]);
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

#[cfg(test)]
#[path = "../tests/support/oracle.rs"]
mod oracle;
