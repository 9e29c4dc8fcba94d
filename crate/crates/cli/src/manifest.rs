//! Dataset manifests: CSV with the header `path,label,subject,group,fold`.
//!
//! `group` and `fold` may be left empty. Relative image paths resolve against
//! the manifest's directory.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use lbpforest::eval::Label;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const HEADER: [&str; 5] = ["path", "label", "subject", "group", "fold"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Record {
    /// Path as written in the manifest.
    pub path: String,
    pub label: Label,
    pub subject: String,
    pub group: Option<String>,
    pub fold: Option<usize>,
}

#[derive(Debug, Deserialize)]
struct Row {
    path: String,
    label: String,
    subject: String,
    #[serde(default)]
    group: Option<String>,
    #[serde(default)]
    fold: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub records: Vec<Record>,
}

impl DatasetManifest {
    /// Reads and validates a manifest: known labels, non-empty subjects,
    /// existing files, groups with a single label, and folds either on every
    /// row or on none.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, root).map_err(|reason| CliError::Manifest {
            path: path.to_path_buf(),
            reason,
        })
    }

    pub fn parse(bytes: &[u8], root: PathBuf) -> std::result::Result<Self, String> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
        let header = reader.headers().map_err(|e| e.to_string())?.clone();
        for required in &HEADER[..3] {
            if !header.iter().any(|h| h == *required) {
                return Err(format!("header lacks the '{required}' column"));
            }
        }
        if let Some(extra) = header.iter().find(|h| !HEADER.contains(h)) {
            return Err(format!("unknown column '{extra}'"));
        }
        let mut records = Vec::new();
        for (i, row) in reader.deserialize::<Row>().enumerate() {
            let line = i + 2;
            let row = row.map_err(|e| format!("line {line}: {e}"))?;
            let label: Label = row
                .label
                .parse()
                .map_err(|_| format!("line {line}: label must be 'genuine' or 'spoof', got '{}'", row.label))?;
            if row.subject.is_empty() {
                return Err(format!("line {line}: empty subject"));
            }
            if row.path.is_empty() {
                return Err(format!("line {line}: empty path"));
            }
            let fold = match row.fold.as_deref() {
                None | Some("") => None,
                Some(f) => Some(
                    f.parse::<usize>()
                        .map_err(|_| format!("line {line}: fold '{f}' is not a non-negative integer"))?,
                ),
            };
            let resolved = root.join(&row.path);
            if !resolved.is_file() {
                return Err(format!("line {line}: image {} not found", resolved.display()));
            }
            records.push(Record {
                path: row.path,
                label,
                subject: row.subject,
                group: row.group.filter(|g| !g.is_empty()),
                fold,
            });
        }
        if records.is_empty() {
            return Err("manifest has no rows".into());
        }
        let with_fold = records.iter().filter(|r| r.fold.is_some()).count();
        if with_fold != 0 && with_fold != records.len() {
            return Err("fold must be set on every row or on none".into());
        }
        let mut group_label: HashMap<&str, Label> = HashMap::new();
        for r in &records {
            if let Some(g) = &r.group {
                if *group_label.entry(g).or_insert(r.label) != r.label {
                    return Err(format!("group '{g}' mixes genuine and spoof rows"));
                }
            }
        }
        Ok(DatasetManifest { root, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn resolve(&self, record: &Record) -> PathBuf {
        self.root.join(&record.path)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label.class()).collect()
    }

    pub fn has_folds(&self) -> bool {
        self.records.iter().all(|r| r.fold.is_some())
    }

    /// Writes records in manifest form.
    pub fn write_csv(records: &[Record], out: impl std::io::Write) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(HEADER)?;
        for r in records {
            w.write_record([
                r.path.as_str(),
                &r.label.to_string(),
                r.subject.as_str(),
                r.group.as_deref().unwrap_or(""),
                &r.fold.map(|f| f.to_string()).unwrap_or_default(),
            ])?;
        }
        w.flush()
    }
}
