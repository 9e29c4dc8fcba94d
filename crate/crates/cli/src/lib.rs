//! Command-line front end for `lbpforest`: dataset manifests, run
//! configuration, the synthetic benchmark and the extract/train/eval/score
//! pipeline.

pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod synth;

pub use config::{Aggregation, Overrides, Protocol, RunConfig};
pub use error::{CliError, Result};
pub use manifest::DatasetManifest;
