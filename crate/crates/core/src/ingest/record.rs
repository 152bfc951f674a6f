use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::logs::{Level, LwkConfig};
use super::method::MethodDefinition;
use crate::error::{Error, Result};

/// One line of `methods.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodRecord {
    pub id: String,
    pub project: String,
    pub path: String,
    pub start_line: u32,
    pub end_line: u32,
    pub signature: String,
    pub body: String,
    pub logs: Vec<LogRecord>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRecord {
    pub level: Level,
    pub description: String,
    pub args: Vec<String>,
    pub start_line: u32,
}

impl From<&MethodDefinition> for MethodRecord {
    fn from(m: &MethodDefinition) -> Self {
        MethodRecord {
            id: m.id.clone(),
            project: m.project.clone(),
            path: m.path.clone(),
            start_line: m.line_span.0,
            end_line: m.line_span.1,
            signature: m.signature.clone(),
            body: m.body_text.clone(),
            logs: m
                .log_statements
                .iter()
                .map(|s| LogRecord {
                    level: s.level,
                    description: s.description_raw.clone(),
                    args: s.argument_exprs.clone(),
                    start_line: s.span.0,
                })
                .collect(),
        }
    }
}

impl MethodRecord {
    /// Rebuilds the method by re-lexing its text; the stored log records
    /// must agree with what `lwk` detects.
    pub fn to_method(&self, lwk: &LwkConfig) -> Result<MethodDefinition> {
        let m = MethodDefinition::from_text(
            self.id.clone(),
            &self.project,
            &self.path,
            self.signature.clone(),
            self.body.clone(),
            self.start_line,
            lwk,
        );
        let back = MethodRecord::from(&m);
        if back.end_line != self.end_line || back.logs != self.logs {
            return Err(Error::InvalidInput(format!(
                "method {} does not match its recorded span or logs under the configured wrappers",
                self.id
            )));
        }
        Ok(m)
    }
}

/// Method names declared per `(project, path)`, used to tell local calls
/// from external ones.
pub fn local_names_by_file(
    methods: &[MethodDefinition],
) -> BTreeMap<(String, String), std::collections::BTreeSet<String>> {
    let mut map: BTreeMap<_, std::collections::BTreeSet<String>> = BTreeMap::new();
    for m in methods {
        map.entry((m.project.clone(), m.path.clone())).or_default().insert(m.name.clone());
    }
    map
}
