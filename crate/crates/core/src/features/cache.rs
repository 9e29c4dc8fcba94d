//! Binary feature cache: one `f32` matrix per scale plus a JSON metadata
//! block.
//!
//! All integers are little-endian.
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `"LBPF"`                          |
//! | 4      | 2    | version (`u16`, currently 1)            |
//! | 6      | 1    | color space tag (0 RGB, 1 HSV, 2 YCbCr) |
//! | 7      | 1    | reserved, 0                             |
//! | 8      | 4    | sample count `n` (`u32`)                |
//! | 12     | 12   | per-scale lengths `d1, d2, d3` (`u32`)  |
//! | 24     | 4    | metadata length `m` (`u32`)             |
//! | 28     | m    | metadata, UTF-8 JSON                    |
//! | 28 + m | ...  | `n × d1`, `n × d2`, `n × d3` `f32` matrices, row-major |

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::imagio::ColorSpace;
use crate::matrix::Matrix;

pub const MAGIC: &[u8; 4] = b"LBPF";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureCache {
    pub space: ColorSpace,
    /// Opaque JSON text describing how the cache was produced.
    pub metadata: String,
    pub scales: [Matrix; 3],
}

impl FeatureCache {
    pub fn new(space: ColorSpace, metadata: String, scales: [Matrix; 3]) -> Result<Self> {
        let n = scales[0].rows();
        if scales.iter().any(|m| m.rows() != n) {
            return Err(Error::invalid("scale matrices differ in sample count"));
        }
        Ok(FeatureCache {
            space,
            metadata,
            scales,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.scales[0].rows()
    }

    pub fn scale_lengths(&self) -> [usize; 3] {
        self.scales.each_ref().map(|m| m.cols())
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        let mut header = Vec::with_capacity(HEADER_LEN);
        header.extend_from_slice(MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.push(self.space.tag());
        header.push(0);
        header.extend_from_slice(&(self.n_samples() as u32).to_le_bytes());
        for len in self.scale_lengths() {
            header.extend_from_slice(&(len as u32).to_le_bytes());
        }
        header.extend_from_slice(&(self.metadata.len() as u32).to_le_bytes());
        w.write_all(&header)?;
        w.write_all(self.metadata.as_bytes())?;
        for m in &self.scales {
            let mut buf = Vec::with_capacity(m.as_slice().len() * 4);
            for v in m.as_slice() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let bad = |reason: String| Error::Format {
            what: "feature cache",
            reason,
        };
        if bytes.len() < HEADER_LEN {
            return Err(bad("file shorter than the header".into()));
        }
        if &bytes[..4] != MAGIC {
            return Err(bad("bad magic bytes".into()));
        }
        let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let space = ColorSpace::from_tag(bytes[6])
            .ok_or_else(|| bad(format!("unknown color space tag {}", bytes[6])))?;
        let n = u32_at(8);
        let lens = [u32_at(12), u32_at(16), u32_at(20)];
        let meta_len = u32_at(24);
        let body = HEADER_LEN + meta_len;
        let expected = body + lens.iter().map(|d| n * d * 4).sum::<usize>();
        if bytes.len() != expected {
            return Err(bad(format!(
                "expected {expected} bytes, found {}",
                bytes.len()
            )));
        }
        let metadata = std::str::from_utf8(&bytes[HEADER_LEN..body])
            .map_err(|e| bad(format!("metadata is not UTF-8: {e}")))?
            .to_string();
        let mut offset = body;
        let mut scales = Vec::with_capacity(3);
        for d in lens {
            let size = n * d * 4;
            let data = bytes[offset..offset + size]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            scales.push(Matrix::from_vec(n, d, data)?);
            offset += size;
        }
        let scales: [Matrix; 3] = scales.try_into().expect("three scales");
        Ok(FeatureCache {
            space,
            metadata,
            scales,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_to(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        FeatureCache::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureCache {
        FeatureCache::new(
            ColorSpace::Hsv,
            "{\"k\":1}".into(),
            [
                Matrix::from_rows(&[vec![1.0f32, 2.0], vec![3.0, 4.0]]).unwrap(),
                Matrix::from_rows(&[vec![0.5f32], vec![-0.25]]).unwrap(),
                Matrix::from_rows(&[vec![7.0f32, 8.0, 9.0], vec![0.0, 0.0, 1.0]]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn header_bytes() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"LBPF");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(bytes[6], 1);
        assert_eq!(&bytes[8..12], &[2, 0, 0, 0]);
        assert_eq!(&bytes[12..24], &[2, 0, 0, 0, 1, 0, 0, 0, 3, 0, 0, 0]);
        assert_eq!(&bytes[24..28], &[7, 0, 0, 0]);
        assert_eq!(&bytes[28..35], b"{\"k\":1}");
        assert_eq!(&bytes[35..39], &1.0f32.to_le_bytes());
        assert_eq!(bytes.len(), 28 + 7 + 4 * (4 + 2 + 6));
    }

    #[test]
    fn round_trip_and_corruption() {
        let cache = sample();
        let bytes = cache.to_bytes();
        assert_eq!(FeatureCache::from_bytes(&bytes).unwrap(), cache);
        assert!(FeatureCache::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(FeatureCache::from_bytes(&bad).is_err());
        let mut bad = bytes.clone();
        bad[6] = 9;
        assert!(FeatureCache::from_bytes(&bad).is_err());
        let mut bad = bytes;
        bad[4] = 2;
        assert!(FeatureCache::from_bytes(&bad).is_err());
    }

    #[test]
    fn mismatched_rows_rejected() {
        assert!(FeatureCache::new(
            ColorSpace::Rgb,
            String::new(),
            [Matrix::zeros(2, 1), Matrix::zeros(1, 1), Matrix::zeros(2, 1)]
        )
        .is_err());
    }
}
