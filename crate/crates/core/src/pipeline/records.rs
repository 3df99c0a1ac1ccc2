use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Variant;
use crate::agent::{RunFailure, ScreeningResult, TerminatedBy};
use crate::domain::SegmentSet;
use crate::error::{Error, Result};
use crate::transcript::Transcript;

/// The per-item output of a screening run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub item_id: String,
    pub variant: Variant,
    pub segments: SegmentSet,
    pub rewritten_query: String,
    pub rounds: usize,
    pub terminated_by: TerminatedBy,
    #[serde(default)]
    pub non_shrinking_rounds: Vec<usize>,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub transcript: Transcript,
}

impl RunRecord {
    pub fn from_result(item_id: &str, variant: Variant, r: ScreeningResult) -> Self {
        RunRecord {
            item_id: item_id.to_string(),
            variant,
            segments: r.pair.video,
            rewritten_query: r.pair.query,
            rounds: r.rounds,
            terminated_by: r.terminated_by,
            non_shrinking_rounds: r.non_shrinking_rounds,
            warnings: r.warnings,
            transcript: r.transcript,
        }
    }
}

/// Written next to the records when an item fails; removed once it succeeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ItemError {
    pub item_id: String,
    pub variant: Variant,
    pub error: String,
    pub backend: bool,
    pub transcript: Transcript,
}

impl ItemError {
    pub fn from_failure(item_id: &str, variant: Variant, f: &RunFailure) -> Self {
        ItemError {
            item_id: item_id.to_string(),
            variant,
            error: f.error.to_string(),
            backend: f.error.is_backend(),
            transcript: f.transcript.clone(),
        }
    }
}

/// File-name form of an item id: ASCII alphanumerics, `-`, `_` and `.` are
/// kept, every other byte becomes `%XX`.
pub fn safe_id(item_id: &str) -> String {
    let mut out = String::with_capacity(item_id.len());
    for b in item_id.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

pub fn record_path(dir: &Path, item_id: &str) -> PathBuf {
    dir.join(format!("{}.json", safe_id(item_id)))
}

pub fn error_path(dir: &Path, item_id: &str) -> PathBuf {
    dir.join(format!("{}.error.json", safe_id(item_id)))
}

pub fn to_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Writes through a temporary file and a rename, so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().ok_or_else(|| Error::validation(format!("{} has no parent", path.display())))?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("record")
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// All run records in a directory, sorted by item id.
pub fn read_records(dir: &Path) -> Result<Vec<RunRecord>> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if !name.ends_with(".json") || name.ends_with(".error.json") || name.starts_with('.') {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let rec: RunRecord = serde_json::from_str(&text)
            .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
        out.push(rec);
    }
    out.sort_by(|a, b| a.item_id.cmp(&b.item_id));
    Ok(out)
}
