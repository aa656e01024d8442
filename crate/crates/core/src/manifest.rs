//! Dataset manifests: ground-truth labels, splits, and image references.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jsonl;
use crate::verdict::Verdict;

/// Closed set of dataset splits: the training and development pools, the
/// in-distribution test set, the human-curated out-of-distribution set, and
/// the eight generation-pattern test sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    IdTest,
    OodC,
    T2i,
    IpOp,
    Ie,
    Fs,
    Cb,
    Vto,
    Rmg,
    Pcmg,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::IdTest => "id_test",
            Split::OodC => "ood_c",
            Split::T2i => "t2i",
            Split::IpOp => "ip_op",
            Split::Ie => "ie",
            Split::Fs => "fs",
            Split::Cb => "cb",
            Split::Vto => "vto",
            Split::Rmg => "rmg",
            Split::Pcmg => "pcmg",
        }
    }

    /// The eight generation-pattern splits, in report column order.
    pub fn patterns() -> [Split; 8] {
        [
            Split::T2i,
            Split::IpOp,
            Split::Ie,
            Split::Fs,
            Split::Cb,
            Split::Vto,
            Split::Rmg,
            Split::Pcmg,
        ]
    }

    /// All splits in report row order.
    pub fn all() -> [Split; 12] {
        [
            Split::Train,
            Split::Dev,
            Split::IdTest,
            Split::OodC,
            Split::T2i,
            Split::IpOp,
            Split::Ie,
            Split::Fs,
            Split::Cb,
            Split::Vto,
            Split::Rmg,
            Split::Pcmg,
        ]
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One dataset sample: ground truth plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestRecord {
    pub sample_id: String,
    pub label: Verdict,
    pub split: Split,
    pub source: String,
    pub image_ref: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_override: Option<String>,
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: duplicate sample_id {id:?}")]
    DuplicateId { line: usize, id: String },
}

/// Load and validate a JSON-lines manifest. Duplicate sample ids and
/// unknown splits are rejected with their line numbers.
pub fn load_manifest<P: AsRef<Path>>(path: P) -> Result<Vec<ManifestRecord>, ManifestError> {
    let file = File::open(path)?;
    parse_manifest(BufReader::new(file))
}

/// Same validation, any reader.
pub fn parse_manifest<R: std::io::BufRead>(
    reader: R,
) -> Result<Vec<ManifestRecord>, ManifestError> {
    let numbered: Vec<(usize, ManifestRecord)> =
        jsonl::read_jsonl_numbered(reader).map_err(|e| match e {
            jsonl::JsonlError::Io(io) => ManifestError::Io(io),
            jsonl::JsonlError::Line { line, message } => ManifestError::Schema { line, message },
        })?;
    let mut seen = HashSet::new();
    for (line, record) in &numbered {
        if !seen.insert(record.sample_id.clone()) {
            return Err(ManifestError::DuplicateId {
                line: *line,
                id: record.sample_id.clone(),
            });
        }
    }
    Ok(numbered.into_iter().map(|(_, r)| r).collect())
}

/// Optional lint: the in-distribution splits are supposed to carry a 1:1
/// real-to-fake ratio. Returns a warning string when they do not; other
/// splits are intentionally imbalanced and are not checked.
pub fn ratio_lint(records: &[ManifestRecord]) -> Option<String> {
    for split in [Split::Train, Split::IdTest] {
        let (mut real, mut fake) = (0usize, 0usize);
        for r in records.iter().filter(|r| r.split == split) {
            match r.label {
                Verdict::Real => real += 1,
                Verdict::Fake => fake += 1,
            }
        }
        if real + fake > 0 && real != fake {
            return Some(format!(
                "split {split} is not balanced 1:1 (real {real}, fake {fake})"
            ));
        }
    }
    None
}
