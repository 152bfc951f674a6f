//! Classification statistics and n-gram overlap scores (BLEU, ROUGE-N,
//! ROUGE-L). Scores are percentages in [0, 100]. Undefined statistics are
//! `None`, never a silent zero.

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Token excluded from every text score.
pub const END_MARKER: &str = "<eos>";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.tn + self.fp + self.fn_
    }

    /// Tallies one labelled prediction.
    pub fn record(&mut self, actual: bool, predicted: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (true, false) => self.fn_ += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
        }
    }
}

/// Fractions in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfusionStats {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f_measure: Option<f64>,
    pub balanced_accuracy: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn confusion_stats(m: &ConfusionMatrix) -> ConfusionStats {
    let precision = ratio(m.tp, m.tp + m.fp);
    let recall = ratio(m.tp, m.tp + m.fn_);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    let specificity = ratio(m.tn, m.tn + m.fp);
    let balanced_accuracy = match (recall, specificity) {
        (Some(r), Some(s)) => Some(0.5 * (r + s)),
        _ => None,
    };
    ConfusionStats { precision, recall, f_measure, balanced_accuracy }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuConfig {
    /// Weight of each n-gram order, starting at unigrams.
    pub weights: Vec<f64>,
}

impl BleuConfig {
    /// Cumulative BLEU-N: uniform weights over orders 1..=n, padded with
    /// zeros to four orders.
    pub fn cumulative(n: usize) -> Self {
        assert!((1..=4).contains(&n), "cumulative BLEU is defined for orders 1 to 4");
        let mut weights = vec![0.0; 4];
        for w in weights.iter_mut().take(n) {
            *w = 1.0 / n as f64;
        }
        BleuConfig { weights }
    }

    pub fn max_order(&self) -> usize {
        self.weights.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config("BLEU weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("BLEU weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

fn scored<S: AsRef<str>>(tokens: &[S]) -> Vec<&str> {
    tokens.iter().map(AsRef::as_ref).filter(|t| *t != END_MARKER).collect()
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w).or_insert(0) += 1;
    }
    counts
}

/// Candidate n-grams matched in the reference, each reference n-gram
/// credited at most as often as it occurs there.
fn clipped_matches<T: Eq + Hash>(candidate: &[T], reference: &[T], n: usize) -> usize {
    let refs = ngram_counts(reference, n);
    ngram_counts(candidate, n)
        .into_iter()
        .map(|(g, c)| c.min(refs.get(g).copied().unwrap_or(0)))
        .sum()
}

/// Sentence BLEU with brevity penalty and no smoothing: any order with a
/// positive weight and zero modified precision yields 0.
pub fn bleu<S: AsRef<str>>(candidate: &[S], reference: &[S], cfg: &BleuConfig) -> f64 {
    let cand = scored(candidate);
    let refr = scored(reference);
    if cand.is_empty() || refr.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (i, &w) in cfg.weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let n = i + 1;
        let total = (cand.len() + 1).saturating_sub(n);
        let matched = clipped_matches(&cand, &refr, n);
        if total == 0 || matched == 0 {
            return 0.0;
        }
        log_sum += w * (matched as f64 / total as f64).ln();
    }
    let (c, r) = (cand.len() as f64, refr.len() as f64);
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    (100.0 * bp * log_sum.exp()).clamp(0.0, 100.0)
}

/// Recall-oriented ROUGE-N. `None` when the reference has no n-gram.
pub fn rouge_n<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> Option<f64> {
    let cand = scored(candidate);
    let refr = scored(reference);
    let total = (refr.len() + 1).checked_sub(n).filter(|t| *t > 0 && n > 0)?;
    let matched = clipped_matches(&cand, &refr, n);
    Some(100.0 * matched as f64 / total as f64)
}

pub fn lcs_len<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RougeLForm {
    #[default]
    Recall,
    F1,
}

/// ROUGE-L as LCS recall over the reference. `None` for an empty reference.
pub fn rouge_l<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> Option<f64> {
    rouge_l_with(candidate, reference, RougeLForm::Recall)
}

pub fn rouge_l_with<S: AsRef<str>>(candidate: &[S], reference: &[S], form: RougeLForm) -> Option<f64> {
    let cand = scored(candidate);
    let refr = scored(reference);
    if refr.is_empty() {
        return None;
    }
    if cand.is_empty() {
        return Some(0.0);
    }
    let lcs = lcs_len(&cand, &refr) as f64;
    let recall = lcs / refr.len() as f64;
    let score = match form {
        RougeLForm::Recall => recall,
        RougeLForm::F1 => {
            let precision = lcs / cand.len() as f64;
            if lcs == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            }
        }
    };
    Some(100.0 * score)
}

/// Rounds a percentage to the two decimals used in reports.
pub fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}
