use std::path::Path;

use globset::{GlobBuilder, GlobSet, GlobSetBuilder};
use walkdir::WalkDir;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceFile {
    /// Path relative to the scanned root, `/`-separated.
    pub path: String,
    pub content: String,
    pub project_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanWarning {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct ScanReport {
    pub files: Vec<SourceFile>,
    pub skipped: Vec<ScanWarning>,
}

fn build_globs(patterns: &[String]) -> Result<GlobSet> {
    let mut builder = GlobSetBuilder::new();
    for p in patterns {
        let glob = GlobBuilder::new(p)
            .literal_separator(false)
            .build()
            .map_err(|e| Error::Config(format!("bad glob {p:?}: {e}")))?;
        builder.add(glob);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

/// Collects files under `root` whose relative path matches any of
/// `include_globs`, in lexicographic path order. The project id is the
/// root directory's name.
pub fn scan_tree(root: &Path, include_globs: &[String]) -> Result<ScanReport> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let globs = build_globs(include_globs)?;
    let project_id = root
        .canonicalize()
        .ok()
        .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .unwrap_or_else(|| "root".to_string());

    let mut report = ScanReport::default();
    let mut found = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if !entry.file_type().is_file() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path());
        let rel = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>();
        let rel = rel.join("/");
        if globs.is_match(&rel) {
            found.push((rel, entry.into_path()));
        }
    }
    found.sort();

    for (rel, abs) in found {
        let bytes = match std::fs::read(&abs) {
            Ok(b) => b,
            Err(e) => {
                report.skipped.push(ScanWarning { path: rel, reason: e.to_string() });
                continue;
            }
        };
        match String::from_utf8(bytes) {
            Ok(content) => report.files.push(SourceFile {
                path: rel,
                content,
                project_id: project_id.clone(),
            }),
            Err(_) => {
                log::warn!("skipping {rel}: not valid UTF-8");
                report.skipped.push(ScanWarning { path: rel, reason: "not valid UTF-8".into() });
            }
        }
    }
    Ok(report)
}
