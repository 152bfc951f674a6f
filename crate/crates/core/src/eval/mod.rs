//! Experimental protocol: ground truth on log-stripped pairs, the location
//! experiment across detection modes, the description experiment across
//! suggestion variants, and verbosity-level agreement.

mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::clones::{is_clone_pair, within_sloc_ratio, DetectionMode, DetectorConfig, MethodProfile};
use crate::corpus::{CorpusSplit, LsdSequence};
use crate::error::{Error, Result};
use crate::ingest::{strip_logs, MethodDefinition};
use crate::lm::{suggest_lsd, LanguageModel, Variant};
use crate::metrics::{bleu, confusion_stats, rouge_l_with, rouge_n, BleuConfig, ConfusionMatrix, RougeLForm};

pub use report::{render_report, run_manifest, ReportFormat, RunManifest, ScoreReport};

/// Profiles of every method in its logged form and its stripped form.
#[derive(Debug, Clone, Default)]
pub struct EvalCorpus {
    logged: BTreeMap<String, MethodProfile>,
    stripped: BTreeMap<String, MethodProfile>,
}

impl EvalCorpus {
    pub fn new(methods: &[MethodDefinition], local_names: &BTreeMap<(String, String), BTreeSet<String>>) -> Self {
        let empty = BTreeSet::new();
        let mut corpus = EvalCorpus::default();
        for m in methods {
            let names = local_names.get(&(m.project.clone(), m.path.clone())).unwrap_or(&empty);
            corpus.logged.insert(m.id.clone(), MethodProfile::new(m, names));
            corpus.stripped.insert(m.id.clone(), MethodProfile::new(&strip_logs(m), names));
        }
        corpus
    }

    pub fn logged(&self, id: &str) -> Option<&MethodProfile> {
        self.logged.get(id)
    }

    pub fn stripped(&self, id: &str) -> Option<&MethodProfile> {
        self.stripped.get(id)
    }

    fn pair(&self, i: &str, j: &str) -> Result<(&MethodProfile, &MethodProfile)> {
        let missing = |id: &str| Error::InvalidInput(format!("unknown method {id}"));
        Ok((self.logged.get(i).ok_or_else(|| missing(i))?, self.stripped.get(j).ok_or_else(|| missing(j))?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub positives: Vec<(String, String)>,
    pub negatives: Vec<(String, String)>,
    pub detector: DetectorConfig,
}

impl GroundTruth {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Labelled pairs, positives first.
    pub fn labelled(&self) -> impl Iterator<Item = (&(String, String), bool)> {
        self.positives.iter().map(|p| (p, true)).chain(self.negatives.iter().map(|p| (p, false)))
    }
}

/// Labels every unordered pair of logged methods whose stripped sizes are
/// within the SLOC band: a pair is positive when its stripped forms are
/// clones. Negatives are kept in id order, capped at `negative_limit`.
pub fn build_ground_truth(corpus: &EvalCorpus, cfg: &DetectorConfig, negative_limit: Option<usize>) -> GroundTruth {
    let logged: Vec<&MethodProfile> = corpus.logged.values().filter(|p| p.has_logs()).collect();
    let mut gt = GroundTruth { positives: Vec::new(), negatives: Vec::new(), detector: *cfg };
    if logged.len() < 2 {
        log::warn!("fewer than two logged methods; the ground truth is empty");
        return gt;
    }
    for (a, pi) in logged.iter().enumerate() {
        for pj in &logged[a + 1..] {
            let (si, sj) = (&corpus.stripped[&pi.id], &corpus.stripped[&pj.id]);
            if !within_sloc_ratio(si.raw.sloc, sj.raw.sloc, cfg.sloc_ratio_filter) {
                continue;
            }
            let pair = (pi.id.clone(), pj.id.clone());
            if is_clone_pair(si, sj, DetectionMode::Full, cfg).is_clone {
                gt.positives.push(pair);
            } else if negative_limit.is_none_or(|n| gt.negatives.len() < n) {
                gt.negatives.push(pair);
            }
        }
    }
    gt
}

/// Scores each labelled `(MD_i, MD_j)` as the logged `MD_i` against the
/// stripped `MD_j`, per mode.
pub fn run_location_experiment(
    gt: &GroundTruth,
    corpus: &EvalCorpus,
    modes: &[DetectionMode],
    cfg: &DetectorConfig,
) -> Result<BTreeMap<DetectionMode, ConfusionMatrix>> {
    if gt.is_empty() {
        return Err(Error::InvalidInput("the ground truth has no labelled pair".into()));
    }
    let mut out = BTreeMap::new();
    for &mode in modes {
        let mut m = ConfusionMatrix::default();
        for ((i, j), actual) in gt.labelled() {
            let (qi, cj) = corpus.pair(i, j)?;
            m.record(actual, is_clone_pair(qi, cj, mode, cfg).is_clone);
        }
        out.insert(mode, m);
    }
    Ok(out)
}

/// BLEU-1..4 and ROUGE-1, 2, 3, L of one test case.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseScores {
    pub bleu: [f64; 4],
    pub rouge_n: [Option<f64>; 3],
    pub rouge_l: Option<f64>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Scores each candidate against the reference and keeps, per metric, the
/// best score any candidate reached.
pub fn score_candidates(candidates: &[LsdSequence], reference: &LsdSequence, form: RougeLForm) -> CaseScores {
    let reference = &reference.tokens;
    let mut best = CaseScores { bleu: [0.0; 4], rouge_n: [None; 3], rouge_l: None };
    for c in candidates {
        let c = &c.tokens;
        for n in 1..=4 {
            best.bleu[n - 1] = best.bleu[n - 1].max(bleu(c, reference, &BleuConfig::cumulative(n)));
        }
        for n in 1..=3 {
            best.rouge_n[n - 1] = max_opt(best.rouge_n[n - 1], rouge_n(c, reference, n));
        }
        best.rouge_l = max_opt(best.rouge_l, rouge_l_with(c, reference, form));
    }
    best
}

/// Macro averages over test cases. A ROUGE-N average only covers cases
/// whose reference has at least one n-gram, and is `None` if there are none.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantScores {
    pub cases: usize,
    pub bleu: [f64; 4],
    pub rouge_n: [Option<f64>; 3],
    pub rouge_l: Option<f64>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn average(cases: &[CaseScores]) -> VariantScores {
    let mut bleu = [0.0; 4];
    for (n, b) in bleu.iter_mut().enumerate() {
        *b = mean(cases.iter().map(|c| c.bleu[n])).unwrap_or(0.0);
    }
    let mut rouge_n = [None; 3];
    for (n, r) in rouge_n.iter_mut().enumerate() {
        *r = mean(cases.iter().filter_map(|c| c.rouge_n[n]));
    }
    VariantScores { cases: cases.len(), bleu, rouge_n, rouge_l: mean(cases.iter().filter_map(|c| c.rouge_l)) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptionReport {
    pub variants: BTreeMap<Variant, VariantScores>,
}

impl DescriptionReport {
    /// `(nlp - no_nlp) / no_nlp` in percent for each of the eight metrics,
    /// `None` where the baseline is zero or undefined.
    pub fn improvement(&self, variant: Variant) -> Option<[Option<f64>; 8]> {
        let base = metric_values(self.variants.get(&Variant::NoNlp)?);
        let other = metric_values(self.variants.get(&variant)?);
        let mut out = [None; 8];
        for k in 0..8 {
            out[k] = match (base[k], other[k]) {
                (Some(b), Some(o)) if b != 0.0 => Some(100.0 * (o - b) / b),
                _ => None,
            };
        }
        Some(out)
    }
}

pub const METRIC_NAMES: [&str; 8] = ["B-1", "B-2", "B-3", "B-4", "R-1", "R-2", "R-3", "R-L"];

pub fn metric_values(s: &VariantScores) -> [Option<f64>; 8] {
    [
        Some(s.bleu[0]),
        Some(s.bleu[1]),
        Some(s.bleu[2]),
        Some(s.bleu[3]),
        s.rouge_n[0],
        s.rouge_n[1],
        s.rouge_n[2],
        s.rouge_l,
    ]
}

/// Suggests a description for every test case under every variant and
/// macro-averages the best candidate scores.
pub fn run_description_experiment(
    split: &CorpusSplit,
    model: Option<&dyn LanguageModel>,
    variants: &[Variant],
    max_len: usize,
    form: RougeLForm,
) -> Result<DescriptionReport> {
    if split.test_cases.is_empty() {
        return Err(Error::InvalidInput("the corpus split has no test case".into()));
    }
    let mut out = BTreeMap::new();
    for &variant in variants {
        let mut cases = Vec::with_capacity(split.test_cases.len());
        for case in &split.test_cases {
            let candidates = suggest_lsd(&case.seed, model, variant, max_len)?;
            cases.push(score_candidates(&candidates, &case.reference, form));
        }
        out.insert(variant, average(&cases));
    }
    Ok(DescriptionReport { variants: out })
}

/// Fraction of pairs whose first logging statements share a verbosity
/// level. `None` for no pairs.
pub fn lvl_match_rate(pairs: &[(&MethodDefinition, &MethodDefinition)]) -> Result<Option<f64>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut matched = 0;
    for (a, b) in pairs {
        let (Some(la), Some(lb)) = (a.log_statements.first(), b.log_statements.first()) else {
            return Err(Error::InvalidInput(format!("pair ({}, {}) has a side without logging statements", a.id, b.id)));
        };
        if la.level == lb.level {
            matched += 1;
        }
    }
    Ok(Some(matched as f64 / pairs.len() as f64))
}

/// Per-mode confusion matrices with their derived statistics, in percent.
pub fn location_rows(
    matrices: &BTreeMap<DetectionMode, ConfusionMatrix>,
) -> Vec<(DetectionMode, ConfusionMatrix, [Option<f64>; 4])> {
    matrices
        .iter()
        .map(|(mode, m)| {
            let s = confusion_stats(m);
            let pct = |x: Option<f64>| x.map(|v| 100.0 * v);
            (*mode, *m, [pct(s.precision), pct(s.recall), pct(s.f_measure), pct(s.balanced_accuracy)])
        })
        .collect()
}
