use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{location_rows, metric_values, DescriptionReport, METRIC_NAMES};
use crate::clones::DetectionMode;
use crate::error::{Error, Result};
use crate::lm::Variant;
use crate::metrics::{round2, ConfusionMatrix};
use crate::stage::hash_comment;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub config_hash: String,
    pub seed: u64,
    pub positives: usize,
    pub negatives: usize,
    pub location: BTreeMap<DetectionMode, ConfusionMatrix>,
    pub description: Option<DescriptionReport>,
    pub lvl_pairs: usize,
    pub lvl_match_rate: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

struct Cell {
    table: &'static str,
    row: String,
    column: &'static str,
    value: String,
}

fn pct(x: Option<f64>) -> String {
    match x {
        Some(v) => format!("{:.2}", round2(v) + 0.0),
        None => "NA".into(),
    }
}

fn cells(r: &ScoreReport) -> Vec<Cell> {
    let mut out = Vec::new();
    let mut push = |table, row: &str, column, value: String| {
        out.push(Cell { table, row: row.to_string(), column, value });
    };
    push("ground_truth", "all", "positives", r.positives.to_string());
    push("ground_truth", "all", "negatives", r.negatives.to_string());
    for (mode, m, stats) in location_rows(&r.location) {
        let row = mode.as_str();
        for (col, v) in [("tp", m.tp), ("tn", m.tn), ("fp", m.fp), ("fn", m.fn_)] {
            push("location", row, col, v.to_string());
        }
        for (col, v) in ["precision", "recall", "f_measure", "balanced_accuracy"].into_iter().zip(stats) {
            push("location", row, col, pct(v));
        }
    }
    if let Some(d) = &r.description {
        for (variant, s) in &d.variants {
            push("description", variant.as_str(), "cases", s.cases.to_string());
            for (col, v) in METRIC_NAMES.into_iter().zip(metric_values(s)) {
                push("description", variant.as_str(), col, pct(v));
            }
        }
        for variant in [Variant::Nlp1, Variant::Nlp3] {
            if let Some(imp) = d.improvement(variant) {
                for (col, v) in METRIC_NAMES.into_iter().zip(imp) {
                    push("improvement", variant.as_str(), col, pct(v));
                }
            }
        }
    }
    push("verbosity", "all", "pairs", r.lvl_pairs.to_string());
    push("verbosity", "all", "lvl_match_rate", pct(r.lvl_match_rate.map(|v| 100.0 * v)));
    out
}

fn title(table: &str) -> &'static str {
    match table {
        "ground_truth" => "Ground truth",
        "location" => "Log location (percent)",
        "description" => "Log description (macro average, percent)",
        "improvement" => "Improvement over no_nlp (percent)",
        _ => "Verbosity level agreement (percent)",
    }
}

/// Renders the report. Both formats hold the same values, percentages
/// with two decimals and `NA` for undefined statistics.
pub fn render_report(r: &ScoreReport, format: ReportFormat) -> Result<String> {
    if r.location.is_empty() && r.description.as_ref().is_none_or(|d| d.variants.is_empty()) {
        return Err(Error::InvalidInput("no experiment results to report".into()));
    }
    let cells = cells(r);
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str(&hash_comment(&r.config_hash));
            out.push_str("table,row,column,value\n");
            for c in &cells {
                writeln!(out, "{},{},{},{}", c.table, c.row, c.column, c.value).expect("string write");
            }
        }
        ReportFormat::Markdown => {
            writeln!(out, "# Evaluation report\n\nconfig hash `{}`, seed {}", r.config_hash, r.seed).expect("string write");
            let mut tables: Vec<&str> = Vec::new();
            for c in &cells {
                if !tables.contains(&c.table) {
                    tables.push(c.table);
                }
            }
            for t in tables {
                let mine: Vec<&Cell> = cells.iter().filter(|c| c.table == t).collect();
                let mut cols: Vec<&str> = Vec::new();
                let mut rows: Vec<&str> = Vec::new();
                for c in &mine {
                    if !cols.contains(&c.column) {
                        cols.push(c.column);
                    }
                    if !rows.contains(&c.row.as_str()) {
                        rows.push(&c.row);
                    }
                }
                writeln!(out, "\n## {}\n\n| | {} |", title(t), cols.join(" | ")).expect("string write");
                writeln!(out, "|---|{}", "---|".repeat(cols.len())).expect("string write");
                for row in rows {
                    let vals: Vec<&str> = cols
                        .iter()
                        .map(|col| {
                            mine.iter().find(|c| c.row == row && c.column == *col).map_or("", |c| c.value.as_str())
                        })
                        .collect();
                    writeln!(out, "| {row} | {} |", vals.join(" | ")).expect("string write");
                }
            }
        }
    }
    Ok(out)
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub seed: u64,
    /// SHA-256 of each input file, by file name.
    pub inputs: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, u128>,
    pub negative_pairs: String,
    pub averaging: String,
}

pub fn run_manifest(
    r: &ScoreReport,
    inputs: BTreeMap<String, String>,
    timings_ms: BTreeMap<String, u128>,
    negative_limit: Option<usize>,
) -> RunManifest {
    let cap = negative_limit.map_or_else(|| "no cap".to_string(), |n| format!("capped at {n} in id order"));
    RunManifest {
        config_hash: r.config_hash.clone(),
        seed: r.seed,
        inputs,
        timings_ms,
        negative_pairs: format!("every non-clone logged pair within the sloc band, {cap}"),
        averaging: "macro average over test cases; undefined ROUGE-N cases excluded".into(),
    }
}
