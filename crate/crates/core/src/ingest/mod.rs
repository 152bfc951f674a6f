//! Source scanning, method extraction and logging-statement detection.

mod logs;
pub(crate) mod method;
mod record;
mod scan;

pub use logs::{detect_in_tokens, Level, LogStatement, LwkConfig};
pub use method::{
    detect_log_statements, extract_methods, method_id, strip_logs, MethodDefinition,
    STRIPPED_MARKER,
};
pub use record::{local_names_by_file, LogRecord, MethodRecord};
pub use scan::{scan_tree, ScanReport, ScanWarning, SourceFile};

use crate::error::Error;

/// Methods extracted from a set of files, plus per-file diagnostics for
/// files that could not be parsed.
#[derive(Debug, Default)]
pub struct Extraction {
    pub methods: Vec<MethodDefinition>,
    pub skipped: Vec<ScanWarning>,
}

/// Extracts every file in order; files with unbalanced braces are skipped
/// with a diagnostic.
pub fn extract_all(files: &[SourceFile], lwk: &LwkConfig) -> Extraction {
    let mut out = Extraction::default();
    for f in files {
        match extract_methods(f, lwk) {
            Ok(ms) => out.methods.extend(ms),
            Err(e @ Error::UnbalancedBraces { .. }) => {
                log::warn!("{e}");
                out.skipped.push(ScanWarning { path: f.path.clone(), reason: e.to_string() });
            }
            Err(e) => {
                out.skipped.push(ScanWarning { path: f.path.clone(), reason: e.to_string() });
            }
        }
    }
    out
}
