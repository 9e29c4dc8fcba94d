//! Image loading, geometric normalization and color-space conversion.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::ColorType;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length every image is normalized to before feature extraction.
pub const NORMALIZED_SIZE: usize = 128;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ColorSpace {
    #[serde(rename = "rgb")]
    Rgb,
    #[serde(rename = "hsv")]
    Hsv,
    #[serde(rename = "ycbcr")]
    YCbCr,
}

impl ColorSpace {
    /// Tag byte used in the feature cache header.
    pub fn tag(self) -> u8 {
        match self {
            ColorSpace::Rgb => 0,
            ColorSpace::Hsv => 1,
            ColorSpace::YCbCr => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(ColorSpace::Rgb),
            1 => Some(ColorSpace::Hsv),
            2 => Some(ColorSpace::YCbCr),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ColorSpace::Rgb => "rgb",
            ColorSpace::Hsv => "hsv",
            ColorSpace::YCbCr => "ycbcr",
        }
    }
}

impl fmt::Display for ColorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ColorSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rgb" => Ok(ColorSpace::Rgb),
            "hsv" => Ok(ColorSpace::Hsv),
            "ycbcr" => Ok(ColorSpace::YCbCr),
            other => Err(Error::invalid(format!("unknown color space '{other}'"))),
        }
    }
}

/// Three-channel 8-bit raster stored as separate planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    space: ColorSpace,
    planes: [Vec<u8>; 3],
}

impl Image {
    pub fn from_planes(
        width: usize,
        height: usize,
        space: ColorSpace,
        planes: [Vec<u8>; 3],
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        for p in &planes {
            if p.len() != width * height {
                return Err(Error::DimensionMismatch {
                    expected: width * height,
                    got: p.len(),
                });
            }
        }
        Ok(Image {
            width,
            height,
            space,
            planes,
        })
    }

    /// Builds an image from interleaved `[c0, c1, c2, c0, ...]` pixels.
    pub fn from_interleaved(
        width: usize,
        height: usize,
        space: ColorSpace,
        pixels: &[u8],
    ) -> Result<Self> {
        if pixels.len() != width * height * 3 {
            return Err(Error::DimensionMismatch {
                expected: width * height * 3,
                got: pixels.len(),
            });
        }
        let mut planes = [
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
            Vec::with_capacity(width * height),
        ];
        for px in pixels.chunks_exact(3) {
            for c in 0..3 {
                planes[c].push(px[c]);
            }
        }
        Image::from_planes(width, height, space, planes)
    }

    pub fn filled(width: usize, height: usize, space: ColorSpace, value: [u8; 3]) -> Result<Self> {
        let n = width * height;
        Image::from_planes(
            width,
            height,
            space,
            [vec![value[0]; n], vec![value[1]; n], vec![value[2]; n]],
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn plane(&self, c: usize) -> &[u8] {
        &self.planes[c]
    }

    pub fn planes(&self) -> &[Vec<u8>; 3] {
        &self.planes
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = y * self.width + x;
        [self.planes[0][i], self.planes[1][i], self.planes[2][i]]
    }

    pub fn to_interleaved(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.width * self.height * 3);
        for i in 0..self.width * self.height {
            out.extend(self.planes.iter().map(|p| p[i]));
        }
        out
    }

    fn map_pixels(&self, space: ColorSpace, f: impl Fn([u8; 3]) -> [u8; 3]) -> Image {
        let n = self.width * self.height;
        let mut planes = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
        for i in 0..n {
            let out = f([self.planes[0][i], self.planes[1][i], self.planes[2][i]]);
            for c in 0..3 {
                planes[c][i] = out[c];
            }
        }
        Image {
            width: self.width,
            height: self.height,
            space,
            planes,
        }
    }
}

/// Loads a PNG, BMP or binary PPM file as an RGB image at its original size.
///
/// Sources that do not carry exactly three color channels (grayscale, gray +
/// alpha, RGBA) are rejected.
pub fn load_image(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes).map_err(|reason| Error::Decode {
        path: path.to_path_buf(),
        reason,
    })
}

/// Decodes an in-memory PNG, BMP or PPM payload.
pub fn decode_image(bytes: &[u8]) -> std::result::Result<Image, String> {
    let format = image::guess_format(bytes).map_err(|e| e.to_string())?;
    let dynamic = image::load_from_memory_with_format(bytes, format).map_err(|e| e.to_string())?;
    match dynamic.color() {
        ColorType::Rgb8 | ColorType::Rgb16 | ColorType::Rgb32F => {}
        other => return Err(format!("expected a 3-channel RGB source, found {other:?}")),
    }
    let rgb = dynamic.to_rgb8();
    let (w, h) = rgb.dimensions();
    Image::from_interleaved(w as usize, h as usize, ColorSpace::Rgb, rgb.as_raw())
        .map_err(|e| e.to_string())
}

#[inline]
fn clamp_round(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear resampling with corner-aligned sample mapping: output pixel `0`
/// maps to input pixel `0` and output pixel `out - 1` to input `in - 1`.
pub fn resize_bilinear(img: &Image, out_w: usize, out_h: usize) -> Result<Image> {
    if out_w == 0 || out_h == 0 {
        return Err(Error::invalid("resize target must be at least 1×1"));
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let axis = |n_in: usize, n_out: usize| -> Vec<(usize, usize, f64)> {
        let scale = if n_out > 1 {
            (n_in - 1) as f64 / (n_out - 1) as f64
        } else {
            0.0
        };
        (0..n_out)
            .map(|o| {
                let src = o as f64 * scale;
                let i0 = (src.floor() as usize).min(n_in - 1);
                let i1 = (i0 + 1).min(n_in - 1);
                (i0, i1, src - i0 as f64)
            })
            .collect()
    };
    let xs = axis(img.width, out_w);
    let ys = axis(img.height, out_h);
    let planes = img.planes.clone().map(|plane| {
        let mut out = Vec::with_capacity(out_w * out_h);
        for &(y0, y1, fy) in &ys {
            let r0 = &plane[y0 * img.width..(y0 + 1) * img.width];
            let r1 = &plane[y1 * img.width..(y1 + 1) * img.width];
            for &(x0, x1, fx) in &xs {
                let top = r0[x0] as f64 + fx * (r0[x1] as f64 - r0[x0] as f64);
                let bottom = r1[x0] as f64 + fx * (r1[x1] as f64 - r1[x0] as f64);
                out.push(clamp_round(top + fy * (bottom - top)));
            }
        }
        out
    });
    Ok(Image {
        width: out_w,
        height: out_h,
        space: img.space,
        planes,
    })
}

/// Resizes to the 128×128 working resolution.
pub fn normalize(img: &Image) -> Result<Image> {
    resize_bilinear(img, NORMALIZED_SIZE, NORMALIZED_SIZE)
}

fn require_rgb(img: &Image) -> Result<()> {
    if img.space != ColorSpace::Rgb {
        return Err(Error::invalid(format!(
            "expected an RGB image, got {}",
            img.space
        )));
    }
    Ok(())
}

/// RGB → HSV with every channel on the 0..=255 scale.
///
/// Hue is `degrees * 255 / 360`, so both 0 and 255 sit next to red.
/// Achromatic pixels (max == min) get hue 0.
pub fn hsv_pixel([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let sat = if max > 0.0 { delta / max * 255.0 } else { 0.0 };
    let hue_deg = if delta == 0.0 {
        0.0
    } else if max == r {
        let h = 60.0 * (g - b) / delta;
        if h < 0.0 {
            h + 360.0
        } else {
            h
        }
    } else if max == g {
        60.0 * (b - r) / delta + 120.0
    } else {
        60.0 * (r - g) / delta + 240.0
    };
    [clamp_round(hue_deg * 255.0 / 360.0), clamp_round(sat), max as u8]
}

/// Full-range BT.601 RGB → YCbCr.
pub fn ycbcr_pixel([r, g, b]: [u8; 3]) -> [u8; 3] {
    let (r, g, b) = (r as f64, g as f64, b as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    let cb = 128.0 - 0.168_736 * r - 0.331_264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418_688 * g - 0.081_312 * b;
    [clamp_round(y), clamp_round(cb), clamp_round(cr)]
}

pub fn to_hsv(img: &Image) -> Result<Image> {
    require_rgb(img)?;
    Ok(img.map_pixels(ColorSpace::Hsv, hsv_pixel))
}

pub fn to_ycbcr(img: &Image) -> Result<Image> {
    require_rgb(img)?;
    Ok(img.map_pixels(ColorSpace::YCbCr, ycbcr_pixel))
}

/// Converts an RGB image into `space` (identity for RGB).
pub fn convert(img: &Image, space: ColorSpace) -> Result<Image> {
    match space {
        ColorSpace::Rgb => {
            require_rgb(img)?;
            Ok(img.clone())
        }
        ColorSpace::Hsv => to_hsv(img),
        ColorSpace::YCbCr => to_ycbcr(img),
    }
}

/// Load, normalize to 128×128 and convert: the full preprocessing chain.
pub fn load_normalized(path: impl AsRef<Path>, space: ColorSpace) -> Result<Image> {
    let img = load_image(path)?;
    convert(&normalize(&img)?, space)
}
