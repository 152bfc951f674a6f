//! Stage files: every output carries the hash of the configuration that
//! produced it, so a later stage can refuse inputs from a different run.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

/// First line of every JSONL stage file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JsonlHeader {
    pub format_version: u32,
    pub stage: String,
    pub config_hash: String,
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

pub fn jsonl_string<T: Serialize>(stage: &str, config_hash: &str, records: &[T]) -> String {
    let header = JsonlHeader {
        format_version: FORMAT_VERSION,
        stage: stage.to_string(),
        config_hash: config_hash.to_string(),
    };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl<T: Serialize>(path: &Path, stage: &str, hash: &str, records: &[T]) -> Result<()> {
    write_text(path, &jsonl_string(stage, hash, records))
}

/// Reads a JSONL stage file. When `expected_hash` is given the header must
/// match it.
pub fn read_jsonl<T: DeserializeOwned>(
    path: &Path,
    stage: &'static str,
    expected_hash: Option<&str>,
) -> Result<(JsonlHeader, Vec<T>)> {
    let text = read_text(path)?;
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::Format { what: stage, line: 1, message: "empty file".into() })?;
    let header: JsonlHeader = serde_json::from_str(first)
        .map_err(|e| Error::Format { what: stage, line: 1, message: e.to_string() })?;
    if header.stage != stage {
        return Err(Error::Format {
            what: stage,
            line: 1,
            message: format!("expected a {stage} file, found {}", header.stage),
        });
    }
    check_hash(path, expected_hash, &header.config_hash)?;
    let mut records = Vec::new();
    for (i, line) in lines {
        let r = serde_json::from_str(line)
            .map_err(|e| Error::Format { what: stage, line: i + 1, message: e.to_string() })?;
        records.push(r);
    }
    Ok((header, records))
}

pub fn check_hash(path: &Path, expected: Option<&str>, found: &str) -> Result<()> {
    match expected {
        Some(exp) if exp != found => Err(Error::ConfigMismatch {
            path: path.to_path_buf(),
            expected: exp.to_string(),
            found: found.to_string(),
        }),
        _ => Ok(()),
    }
}

/// Comment line used by the plain-text formats (CSV, TSV, text).
pub fn hash_comment(hash: &str) -> String {
    format!("# config_hash={hash}\n")
}

/// Splits a plain-text stage file into its config hash and remaining lines.
pub fn split_hash_comment<'a>(
    path: &Path,
    what: &'static str,
    text: &'a str,
    expected: Option<&str>,
) -> Result<Vec<&'a str>> {
    let mut lines = text.lines();
    let first = lines.next().unwrap_or("");
    let found = first.strip_prefix("# config_hash=").ok_or_else(|| Error::Format {
        what,
        line: 1,
        message: "missing config hash line".into(),
    })?;
    check_hash(path, expected, found.trim())?;
    Ok(lines.collect())
}
