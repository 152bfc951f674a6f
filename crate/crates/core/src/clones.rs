//! Clone-pair decisions from feature vectors.
//!
//! Three detection modes differ only in which features and token bags are
//! compared:
//!
//! | mode      | numeric features | token bags        |
//! |-----------|------------------|-------------------|
//! | `raw`     | raw              | raw               |
//! | `si_only` | log-aware        | raw (logs kept)   |
//! | `full`    | log-aware        | log-stripped      |
//!
//! `full` decisions are invariant to logging statements on either side.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{extract_features, token_bag, FeatureMode, FeatureVector, TokenBag};
use crate::ingest::{strip_logs, MethodDefinition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectionMode {
    Raw,
    SiOnly,
    Full,
}

impl DetectionMode {
    pub const ALL: [DetectionMode; 3] = [DetectionMode::Raw, DetectionMode::SiOnly, DetectionMode::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectionMode::Raw => "raw",
            DetectionMode::SiOnly => "si_only",
            DetectionMode::Full => "full",
        }
    }
}

impl fmt::Display for DetectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(DetectionMode::Raw),
            "si_only" => Ok(DetectionMode::SiOnly),
            "full" => Ok(DetectionMode::Full),
            other => Err(Error::InvalidInput(format!("unknown detection mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureWeights {
    pub ntok: f64,
    pub nos: f64,
    pub nexp: f64,
    pub lmet: f64,
    pub xmet: f64,
    pub sloc: f64,
    pub token_bag: f64,
}

impl FeatureWeights {
    pub fn equal() -> Self {
        let w = 1.0 / 7.0;
        FeatureWeights { ntok: w, nos: w, nexp: w, lmet: w, xmet: w, sloc: w, token_bag: w }
    }

    /// Weights in evidence order: the six numeric features, then the bag.
    pub fn as_array(&self) -> [f64; 7] {
        [self.ntok, self.nos, self.nexp, self.lmet, self.xmet, self.sloc, self.token_bag]
    }
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self::equal()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub threshold: f64,
    pub weights: FeatureWeights,
    /// Candidates whose SLOC differs from the query's by more than this
    /// factor are never scored.
    pub sloc_ratio_filter: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { threshold: 0.85, weights: FeatureWeights::equal(), sloc_ratio_filter: 3.0 }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(Error::Config(format!("threshold {} not in (0, 1]", self.threshold)));
        }
        let w = self.weights.as_array();
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Config("feature weights must be non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("feature weights sum to {sum}, not 1")));
        }
        if !(self.sloc_ratio_filter >= 1.0) {
            return Err(Error::Config("sloc_ratio_filter must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-feature similarity terms, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub ntok: f64,
    pub nos: f64,
    pub nexp: f64,
    pub lmet: f64,
    pub xmet: f64,
    pub sloc: f64,
    pub token_bag: f64,
}

impl Evidence {
    pub fn as_array(&self) -> [f64; 7] {
        [self.ntok, self.nos, self.nexp, self.lmet, self.xmet, self.sloc, self.token_bag]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClonePair {
    pub query_id: String,
    pub candidate_id: String,
    pub score: f64,
    pub mode: DetectionMode,
    pub is_clone: bool,
    pub evidence: Evidence,
}

fn count_term(x: u32, y: u32) -> f64 {
    let (x, y) = (f64::from(x), f64::from(y));
    1.0 - (x - y).abs() / x.max(y).max(1.0)
}

/// Multiset Jaccard index; two empty bags are identical.
pub fn bag_jaccard(a: &TokenBag, b: &TokenBag) -> f64 {
    let mut inter = 0u64;
    let mut union = 0u64;
    let keys: BTreeSet<&String> = a.keys().chain(b.keys()).collect();
    for k in keys {
        let x = u64::from(a.get(k).copied().unwrap_or(0));
        let y = u64::from(b.get(k).copied().unwrap_or(0));
        inter += x.min(y);
        union += x.max(y);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

pub fn similarity_terms(a: &FeatureVector, b: &FeatureVector, bag_a: &TokenBag, bag_b: &TokenBag) -> Evidence {
    Evidence {
        ntok: count_term(a.ntok, b.ntok),
        nos: count_term(a.nos, b.nos),
        nexp: count_term(a.nexp, b.nexp),
        lmet: count_term(a.lmet, b.lmet),
        xmet: count_term(a.xmet, b.xmet),
        sloc: count_term(a.sloc, b.sloc),
        token_bag: bag_jaccard(bag_a, bag_b),
    }
}

// Dividing by the weight sum keeps an all-ones evidence at exactly 1.0.
fn weighted(e: &Evidence, cfg: &DetectorConfig) -> f64 {
    let w = cfg.weights.as_array();
    let num: f64 = e.as_array().iter().zip(w).map(|(t, w)| t * w).sum();
    let den: f64 = w.iter().sum();
    (num / den).clamp(0.0, 1.0)
}

/// Weighted mean of the per-feature similarity terms.
pub fn similarity(
    a: &FeatureVector,
    b: &FeatureVector,
    bag_a: &TokenBag,
    bag_b: &TokenBag,
    cfg: &DetectorConfig,
) -> f64 {
    weighted(&similarity_terms(a, b, bag_a, bag_b), cfg)
}

/// Everything the detector needs about one method, computed once.
#[derive(Debug, Clone)]
pub struct MethodProfile {
    pub id: String,
    pub log_count: usize,
    pub raw: FeatureVector,
    pub log_aware: FeatureVector,
    pub raw_bag: TokenBag,
    pub stripped_bag: TokenBag,
}

impl MethodProfile {
    pub fn new(method: &MethodDefinition, local_names: &BTreeSet<String>) -> Self {
        let stripped = strip_logs(method);
        MethodProfile {
            id: method.id.clone(),
            log_count: method.log_statements.len(),
            raw: extract_features(method, local_names, FeatureMode::Raw),
            log_aware: extract_features(method, local_names, FeatureMode::LogAware),
            raw_bag: token_bag(method),
            stripped_bag: token_bag(&stripped),
        }
    }

    /// Builds a profile from precomputed feature vectors (for example read
    /// back from `features.jsonl`).
    pub fn with_features(method: &MethodDefinition, raw: FeatureVector, log_aware: FeatureVector) -> Self {
        MethodProfile {
            id: method.id.clone(),
            log_count: method.log_statements.len(),
            raw,
            log_aware,
            raw_bag: token_bag(method),
            stripped_bag: token_bag(&strip_logs(method)),
        }
    }

    pub fn has_logs(&self) -> bool {
        self.log_count > 0
    }

    pub fn base_id(&self) -> &str {
        self.id.trim_end_matches(crate::ingest::STRIPPED_MARKER)
    }

    fn view(&self, mode: DetectionMode) -> (&FeatureVector, &TokenBag) {
        match mode {
            DetectionMode::Raw => (&self.raw, &self.raw_bag),
            // The unlogged side's raw vector equals its log-aware one, so
            // one-sided log awareness is the log-aware vector on both sides.
            DetectionMode::SiOnly => (&self.log_aware, &self.raw_bag),
            DetectionMode::Full => (&self.log_aware, &self.stripped_bag),
        }
    }

    fn sloc(&self, mode: DetectionMode) -> u32 {
        self.view(mode).0.sloc
    }
}

pub fn is_clone_pair(q: &MethodProfile, c: &MethodProfile, mode: DetectionMode, cfg: &DetectorConfig) -> ClonePair {
    let (fq, bq) = q.view(mode);
    let (fc, bc) = c.view(mode);
    let evidence = similarity_terms(fq, fc, bq, bc);
    let score = weighted(&evidence, cfg);
    ClonePair {
        query_id: q.id.clone(),
        candidate_id: c.id.clone(),
        score,
        mode,
        is_clone: score >= cfg.threshold,
        evidence,
    }
}

/// Whether two SLOC values are within the configured size ratio.
pub fn within_sloc_ratio(a: u32, b: u32, ratio: f64) -> bool {
    let (lo, hi) = (a.min(b).max(1), a.max(b).max(1));
    f64::from(hi) / f64::from(lo) <= ratio
}

/// Immutable candidate index. Methods are bucketed by SLOC so that a query
/// only scores candidates inside its size band.
#[derive(Debug, Clone, Default)]
pub struct CloneIndex {
    profiles: Vec<MethodProfile>,
    raw_sloc: BTreeMap<u32, Vec<usize>>,
    aware_sloc: BTreeMap<u32, Vec<usize>>,
}

impl CloneIndex {
    pub fn build(profiles: Vec<MethodProfile>) -> Self {
        let mut profiles = profiles;
        profiles.sort_by(|a, b| a.id.cmp(&b.id));
        let mut raw_sloc: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        let mut aware_sloc: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, p) in profiles.iter().enumerate() {
            raw_sloc.entry(p.raw.sloc).or_default().push(i);
            aware_sloc.entry(p.log_aware.sloc).or_default().push(i);
        }
        CloneIndex { profiles, raw_sloc, aware_sloc }
    }

    pub fn from_methods(methods: &[MethodDefinition], local_names: impl Fn(&MethodDefinition) -> BTreeSet<String>) -> Self {
        Self::build(methods.iter().map(|m| MethodProfile::new(m, &local_names(m))).collect())
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }

    pub fn profiles(&self) -> &[MethodProfile] {
        &self.profiles
    }

    pub fn get(&self, id: &str) -> Option<&MethodProfile> {
        self.profiles
            .binary_search_by(|p| p.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.profiles[i])
    }

    /// Profiles whose SLOC (in the mode's view) is within the ratio band of
    /// `sloc`, in id order.
    pub fn band(&self, sloc: u32, mode: DetectionMode, ratio: f64) -> Vec<&MethodProfile> {
        let map = match mode {
            DetectionMode::Raw => &self.raw_sloc,
            _ => &self.aware_sloc,
        };
        let lo = (f64::from(sloc.max(1)) / ratio).floor() as u32;
        let hi = (f64::from(sloc.max(1)) * ratio).ceil() as u32;
        let mut idx: Vec<usize> = map
            .range(lo..=hi)
            .flat_map(|(_, v)| v.iter().copied())
            .filter(|&i| within_sloc_ratio(sloc, self.profiles[i].sloc(mode), ratio))
            .collect();
        idx.sort_unstable();
        idx.into_iter().map(|i| &self.profiles[i]).collect()
    }
}

fn rank(pairs: &mut [ClonePair]) {
    pairs.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.candidate_id.cmp(&b.candidate_id)));
}

/// Clones of `q` in the index, best first. The query itself (and its
/// stripped or unstripped twin) is never a candidate.
pub fn find_clones(q: &MethodProfile, index: &CloneIndex, mode: DetectionMode, cfg: &DetectorConfig) -> Vec<ClonePair> {
    let mut out: Vec<ClonePair> = index
        .band(q.sloc(mode), mode, cfg.sloc_ratio_filter)
        .into_iter()
        .filter(|c| c.base_id() != q.base_id())
        .map(|c| is_clone_pair(q, c, mode, cfg))
        .filter(|p| p.is_clone)
        .collect();
    rank(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocationSuggestion {
    pub query_id: String,
    pub needs_log: bool,
    /// Detected clones that contain at least one logging statement.
    pub evidence: Vec<ClonePair>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Decides whether a method under development should get a logging
/// statement: it should if any of its clones has one.
pub fn suggest_log_location(
    q: &MethodDefinition,
    local_names: &BTreeSet<String>,
    index: &CloneIndex,
    mode: DetectionMode,
    cfg: &DetectorConfig,
) -> LocationSuggestion {
    let mut warning = None;
    let query = if q.has_logs() {
        let msg = format!("{} already has logging statements; suggesting for its stripped form", q.id);
        log::warn!("{msg}");
        warning = Some(msg);
        strip_logs(q)
    } else {
        q.clone()
    };
    let profile = MethodProfile::new(&query, local_names);
    let evidence: Vec<ClonePair> = find_clones(&profile, index, mode, cfg)
        .into_iter()
        .filter(|p| index.get(&p.candidate_id).is_some_and(MethodProfile::has_logs))
        .collect();
    LocationSuggestion { query_id: q.id.clone(), needs_log: !evidence.is_empty(), evidence, warning }
}

/// `pairs.csv` rendering: `query_id,candidate_id,mode,score,is_clone`.
pub fn pairs_csv(pairs: &[ClonePair]) -> String {
    let mut out = String::from("query_id,candidate_id,mode,score,is_clone\n");
    for p in pairs {
        out.push_str(&format!(
            "{},{},{},{:.6},{}\n",
            csv_field(&p.query_id),
            csv_field(&p.candidate_id),
            p.mode,
            p.score,
            p.is_clone
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A row of `pairs.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRow {
    pub query_id: String,
    pub candidate_id: String,
    pub mode: DetectionMode,
    pub score: f64,
    pub is_clone: bool,
}

fn split_csv_line(line: &str) -> Vec<String> {
    let mut fields = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '"' if quoted && chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            '"' => quoted = !quoted,
            ',' if !quoted => fields.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    fields.push(cur);
    fields
}

pub fn parse_pairs_csv(lines: &[&str]) -> Result<Vec<PairRow>> {
    let bad = |line: usize, message: String| Error::Format { what: "pairs.csv", line, message };
    let mut rows = Vec::new();
    for (i, line) in lines.iter().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let f = split_csv_line(line);
        if f.len() != 5 {
            return Err(bad(i + 1, format!("expected 5 fields, found {}", f.len())));
        }
        rows.push(PairRow {
            query_id: f[0].clone(),
            candidate_id: f[1].clone(),
            mode: f[2].parse()?,
            score: f[3].parse().map_err(|e| bad(i + 1, format!("score: {e}")))?,
            is_clone: f[4].parse().map_err(|e| bad(i + 1, format!("is_clone: {e}")))?,
        });
    }
    Ok(rows)
}
