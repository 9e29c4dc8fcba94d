//! Run configuration: defaults, a `key = value` file, then command-line
//! overrides.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use lbpforest::cascade::CascadeConfig;
use lbpforest::imagio::ColorSpace;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Every image is scored on its own.
    Frame,
    /// Frame scores are averaged per manifest group.
    Mean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Protocol {
    /// One train/test partition.
    Holdout,
    /// Five subject-disjoint folds, each used once as the test set.
    Kfold5,
}

impl Protocol {
    pub fn folds(self) -> usize {
        match self {
            Protocol::Holdout => 2,
            Protocol::Kfold5 => 5,
        }
    }
}

macro_rules! text_enum {
    ($t:ty { $($name:literal => $v:expr),+ $(,)? }) => {
        impl FromStr for $t {
            type Err = String;
            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($v),)+
                    other => Err(format!("unknown value '{other}'")),
                }
            }
        }
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                let name = match self { $(v if *v == $v => $name,)+ _ => unreachable!() };
                f.write_str(name)
            }
        }
    };
}

text_enum!(Aggregation { "frame" => Aggregation::Frame, "mean" => Aggregation::Mean });
text_enum!(Protocol { "holdout" => Protocol::Holdout, "kfold5" => Protocol::Kfold5 });

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub color_space: ColorSpace,
    pub trees: usize,
    /// Cross-fitting folds inside each cascade layer.
    pub folds: usize,
    pub patience: usize,
    pub max_layers: usize,
    pub seed: u64,
    pub aggregate: Aggregation,
    pub gsm: bool,
    pub protocol: Protocol,
    /// Patch rows per scanning forest for the baseline.
    pub gsm_max_patches: usize,
    /// Thread pool size. Results do not depend on it, so it is not recorded.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = CascadeConfig::default();
        RunConfig {
            color_space: ColorSpace::Hsv,
            trees: c.n_trees,
            folds: c.folds,
            patience: c.patience,
            max_layers: c.max_layers,
            seed: c.seed,
            aggregate: Aggregation::Frame,
            gsm: false,
            protocol: Protocol::Holdout,
            gsm_max_patches: 2000,
            workers: None,
        }
    }
}

/// Values given on the command line; `None` keeps the file or default value.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub color_space: Option<ColorSpace>,
    pub trees: Option<usize>,
    pub folds: Option<usize>,
    pub patience: Option<usize>,
    pub max_layers: Option<usize>,
    pub seed: Option<u64>,
    pub aggregate: Option<Aggregation>,
    pub gsm: Option<bool>,
    pub protocol: Option<Protocol>,
    pub workers: Option<usize>,
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{key} = {value}: {e}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::Config(format!("{key} = {value}: expected a boolean"))),
    }
}

impl RunConfig {
    /// Applies `key = value` lines. `#` starts a comment; keys accept `-` or
    /// `_`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            match key.as_str() {
                "color_space" => self.color_space = parse_value(&key, value)?,
                "trees" => self.trees = parse_value(&key, value)?,
                "folds" => self.folds = parse_value(&key, value)?,
                "patience" => self.patience = parse_value(&key, value)?,
                "max_layers" => self.max_layers = parse_value(&key, value)?,
                "seed" => self.seed = parse_value(&key, value)?,
                "aggregate" => self.aggregate = parse_value(&key, value)?,
                "gsm" => self.gsm = parse_bool(&key, value)?,
                "protocol" => self.protocol = parse_value(&key, value)?,
                "gsm_max_patches" => self.gsm_max_patches = parse_value(&key, value)?,
                "workers" => self.workers = Some(parse_value(&key, value)?),
                other => return Err(CliError::Config(format!("line {}: unknown key '{other}'", i + 1))),
            }
        }
        Ok(())
    }

    pub fn apply_overrides(&mut self, o: &Overrides) {
        macro_rules! take {
            ($($f:ident),+) => { $(if let Some(v) = o.$f { self.$f = v; })+ };
        }
        take!(color_space, trees, folds, patience, max_layers, seed, aggregate, gsm, protocol);
        if o.workers.is_some() {
            self.workers = o.workers;
        }
    }

    /// Defaults, then the optional file, then flags.
    pub fn resolve(file: Option<&Path>, overrides: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_text(&text)?;
        }
        cfg.apply_overrides(overrides);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(CliError::Config(msg.into())) };
        check((1..=10_000).contains(&self.trees), "trees must be in 1..=10000")?;
        check((2..=20).contains(&self.folds), "folds must be in 2..=20")?;
        check((1..=64).contains(&self.patience), "patience must be in 1..=64")?;
        check((1..=64).contains(&self.max_layers), "max_layers must be in 1..=64")?;
        check(self.gsm_max_patches >= 2, "gsm_max_patches must be at least 2")?;
        check(self.workers != Some(0), "workers must be positive")
    }

    pub fn cascade(&self, seed: u64) -> CascadeConfig {
        CascadeConfig {
            n_trees: self.trees,
            folds: self.folds,
            patience: self.patience,
            max_layers: self.max_layers,
            max_depth: None,
            seed,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

/// SHA-256 over labelled input chunks. Each chunk is length-prefixed so
/// boundaries cannot shift between chunks.
#[derive(Default)]
pub struct ContentHash(Sha256);

impl ContentHash {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, label: &str, bytes: &[u8]) -> &mut Self {
        for part in [label.as_bytes(), bytes] {
            self.0.update((part.len() as u64).to_le_bytes());
            self.0.update(part);
        }
        self
    }

    pub fn finish(self) -> String {
        hex::encode(self.0.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut cfg = RunConfig::default();
        cfg.apply_text("# run\ncolor-space = ycbcr\ntrees = 64  # small\ngsm = yes\nprotocol=kfold5\n")
            .unwrap();
        assert_eq!(cfg.color_space, ColorSpace::YCbCr);
        assert_eq!(cfg.trees, 64);
        assert!(cfg.gsm);
        assert_eq!(cfg.protocol, Protocol::Kfold5);
        cfg.apply_overrides(&Overrides {
            trees: Some(8),
            gsm: Some(false),
            ..Default::default()
        });
        assert_eq!((cfg.trees, cfg.gsm, cfg.color_space), (8, false, ColorSpace::YCbCr));
    }

    #[test]
    fn bad_config_lines() {
        for text in ["trees", "trees = many", "colour = rgb", "gsm = maybe", "aggregate = median"] {
            assert!(RunConfig::default().apply_text(text).is_err(), "{text}");
        }
        let cfg = RunConfig {
            trees: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn workers_not_recorded() {
        let cfg = RunConfig {
            workers: Some(3),
            ..RunConfig::default()
        };
        let json = cfg.to_json();
        assert!(json.get("workers").is_none());
        assert_eq!(json["color_space"], "hsv");
        assert_eq!(json["aggregate"], "frame");
    }

    #[test]
    fn hash_separates_chunks() {
        let mut a = ContentHash::new();
        a.update("x", b"ab").update("y", b"c");
        let mut b = ContentHash::new();
        b.update("x", b"a").update("y", b"bc");
        assert_ne!(a.finish(), b.finish());
        assert_eq!(ContentHash::new().finish().len(), 64);
    }
}
