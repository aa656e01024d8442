//! Small JSON-lines helpers shared by the data-file readers and writers.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
}

/// Parse one record per non-empty line, reporting 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, JsonlError> {
    read_jsonl_numbered(reader).map(|v| v.into_iter().map(|(_, t)| t).collect())
}

/// Like [`read_jsonl`] but keeps each record's line number.
pub fn read_jsonl_numbered<T: DeserializeOwned, R: BufRead>(
    reader: R,
) -> Result<Vec<(usize, T)>, JsonlError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| JsonlError::Line {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, record));
    }
    Ok(out)
}

/// Serialize records one per line.
pub fn write_jsonl<T: Serialize, W: Write>(writer: &mut W, records: &[T]) -> Result<(), JsonlError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| JsonlError::Line {
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(writer, "{line}")?;
    }
    Ok(())
}

/// Round to nine decimal places. Probabilities and reward components are
/// emitted quantized like this so identical inputs serialize to identical
/// bytes.
pub fn quantize9(x: f64) -> f64 {
    if x.is_finite() {
        (x * 1e9).round() / 1e9
    } else {
        x
    }
}
