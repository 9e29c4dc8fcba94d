//! Face anti-spoofing toolkit built on multi-scale color local binary
//! patterns and a deep-forest cascade.
//!
//! The pipeline is:
//!
//! 1. [`imagio`]: load an image, normalize it to 128×128 and convert it to
//!    the working color space.
//! 2. [`features`]: compute uniform LBP histograms over a 7×7 grid of
//!    overlapping 32-pixel patches at three (P, R) scales, or the
//!    grained-scanning baseline representations.
//! 3. [`cascade`]: train a layered forest cascade where layer *n* consumes
//!    scale `((n - 1) mod 3) + 1` plus the previous layer's class vectors.
//! 4. [`eval`]: score samples and report EER / HTER.

pub mod cascade;
pub mod error;
pub mod eval;
pub mod features;
pub mod forest;
pub mod imagio;
pub mod lbp;
mod matrix;
pub mod seed;

pub use error::{Error, Result};
pub use matrix::Matrix;
