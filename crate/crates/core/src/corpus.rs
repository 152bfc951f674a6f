//! Log-description corpus: cleaning descriptions into token sequences,
//! splitting clone pairs into mutually exclusive training and test data,
//! and the token vocabulary.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::ingest::{Level, LogStatement, MethodDefinition};
pub use crate::metrics::END_MARKER;

pub const UNKNOWN_TOKEN: &str = "<unk>";
/// Left padding for contexts shorter than the model's window. Never part of
/// the vocabulary.
pub const START_TOKEN: &str = "<s>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub lowercase: bool,
    pub min_count: u64,
    /// Collapse identical training sequences to one occurrence.
    pub dedup: bool,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig { lowercase: true, min_count: 1, dedup: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LsdSequence {
    /// Tokens, terminated by [`END_MARKER`].
    pub tokens: Vec<String>,
    pub origin_method: String,
    pub statement_index: usize,
    pub origin_level: Level,
}

impl LsdSequence {
    /// Tokens before the end marker.
    pub fn content(&self) -> &[String] {
        match self.tokens.last() {
            Some(t) if t == END_MARKER => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }

    /// Nothing remained after cleaning.
    pub fn is_empty(&self) -> bool {
        self.content().is_empty()
    }

    pub fn text(&self) -> String {
        self.content().join(" ")
    }

    pub fn from_tokens(tokens: Vec<String>) -> Self {
        let mut tokens = tokens;
        if tokens.last().map(String::as_str) != Some(END_MARKER) {
            tokens.push(END_MARKER.to_string());
        }
        LsdSequence { tokens, origin_method: String::new(), statement_index: 0, origin_level: Level::Unknown }
    }
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\{\d*\}|%[-#+ 0,(]*\d*(?:\.\d+)?[a-zA-Z%]").expect("valid placeholder pattern")
});

fn remove_escapes(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('u') => {
                while chars.peek() == Some(&'u') {
                    chars.next();
                }
                for _ in 0..4 {
                    if chars.peek().is_some_and(char::is_ascii_hexdigit) {
                        chars.next();
                    }
                }
            }
            Some(q @ ('"' | '\'' | '\\')) => out.push(q),
            Some(_) | None => out.push(' '),
        }
    }
    out
}

/// Cleans a raw description into tokens (no end marker): escapes and
/// format placeholders are dropped, characters outside printable ASCII are
/// removed, words are runs of letters, digits and `_`, and every other
/// printable character is its own token.
pub fn description_tokens(raw: &str, lowercase: bool) -> Vec<String> {
    let unescaped = remove_escapes(raw);
    let text = PLACEHOLDER.replace_all(&unescaped, " ");
    let mut tokens = Vec::new();
    let mut word = String::new();
    for c in text.chars() {
        if !(' '..='~').contains(&c) {
            continue;
        }
        if c.is_ascii_alphanumeric() || c == '_' {
            word.push(if lowercase { c.to_ascii_lowercase() } else { c });
            continue;
        }
        if !word.is_empty() {
            tokens.push(std::mem::take(&mut word));
        }
        if c != ' ' {
            tokens.push(c.to_string());
        }
    }
    if !word.is_empty() {
        tokens.push(word);
    }
    tokens
}

/// The description of one logging statement as a token sequence. Dynamic
/// parts are already absent from `description_raw`.
pub fn extract_lsd(stmt: &LogStatement, origin_method: &str, statement_index: usize, cfg: &CorpusConfig) -> LsdSequence {
    let mut tokens = description_tokens(&stmt.description_raw, cfg.lowercase);
    tokens.push(END_MARKER.to_string());
    LsdSequence {
        tokens,
        origin_method: origin_method.to_string(),
        statement_index,
        origin_level: stmt.level,
    }
}

pub fn method_lsds(method: &MethodDefinition, cfg: &CorpusConfig) -> Vec<LsdSequence> {
    method
        .log_statements
        .iter()
        .enumerate()
        .map(|(i, s)| extract_lsd(s, &method.id, i, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub query_id: String,
    pub candidate_id: String,
    pub seed: LsdSequence,
    pub reference: LsdSequence,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<LsdSequence>,
    pub test_cases: Vec<TestCase>,
}

impl CorpusSplit {
    /// No reference description's `(method, statement)` identity occurs in
    /// the training data.
    pub fn is_exclusive(&self) -> bool {
        let train: BTreeSet<(&str, usize)> =
            self.train.iter().map(|s| (s.origin_method.as_str(), s.statement_index)).collect();
        self.test_cases
            .iter()
            .all(|c| !train.contains(&(c.reference.origin_method.as_str(), c.reference.statement_index)))
    }
}

/// Builds training sequences from the query side (`MD_i`) of each clone
/// pair and test cases from the candidate side (`MD_j`).
///
/// A method takes at most one role: once it has supplied training data it is
/// never a test reference, and vice versa; pairs that would violate this are
/// skipped, in `(query, candidate)` order. Each candidate statement is seeded
/// with the query statement at the same position, or the query's first
/// statement when the query has fewer.
pub fn build_splits(
    pairs: &[(String, String)],
    methods: &BTreeMap<String, MethodDefinition>,
    cfg: &CorpusConfig,
) -> Result<CorpusSplit> {
    let mut pairs: Vec<&(String, String)> = pairs.iter().collect();
    pairs.sort();
    pairs.dedup();

    let lookup = |id: &str| {
        methods.get(id).ok_or_else(|| Error::InvalidInput(format!("pair refers to unknown method {id}")))
    };

    let mut train_methods = BTreeSet::new();
    let mut test_methods = BTreeSet::new();
    let mut split = CorpusSplit::default();
    let mut seen_train: BTreeSet<(String, usize)> = BTreeSet::new();

    for (qid, cid) in pairs {
        let q = lookup(qid)?;
        let c = lookup(cid)?;
        if !q.has_logs() {
            return Err(Error::InvalidInput(format!("query method {qid} has no logging statement")));
        }
        if qid == cid || test_methods.contains(qid) || train_methods.contains(cid) {
            log::debug!("skipping pair ({qid}, {cid}): a method would take both roles");
            continue;
        }
        train_methods.insert(qid.clone());

        let q_lsds = method_lsds(q, cfg);
        for lsd in &q_lsds {
            if !lsd.is_empty() && seen_train.insert((lsd.origin_method.clone(), lsd.statement_index)) {
                split.train.push(lsd.clone());
            }
        }

        if !c.has_logs() {
            continue;
        }
        test_methods.insert(cid.clone());
        for reference in method_lsds(c, cfg) {
            let k = reference.statement_index;
            let seed = q_lsds.get(k).unwrap_or(&q_lsds[0]);
            if reference.is_empty() || seed.is_empty() {
                log::debug!("skipping empty description in pair ({qid}, {cid})");
                continue;
            }
            split.test_cases.push(TestCase {
                query_id: qid.clone(),
                candidate_id: cid.clone(),
                seed: seed.clone(),
                reference,
            });
        }
    }

    if cfg.dedup {
        let mut seen = BTreeSet::new();
        split.train.retain(|s| seen.insert(s.tokens.clone()));
    }
    debug_assert!(split.is_exclusive());
    Ok(split)
}

/// Token to index map with `<eos>` at 0 and `<unk>` at 1; the remaining
/// tokens are ordered by descending frequency, then lexicographically.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub const EOS: u32 = 0;
    pub const UNK: u32 = 1;

    pub fn build(train: &[LsdSequence], min_count: u64) -> Result<Self> {
        if train.iter().all(LsdSequence::is_empty) {
            return Err(Error::InvalidInput("training set has no non-empty description".into()));
        }
        let mut freq: BTreeMap<&str, u64> = BTreeMap::new();
        for s in train {
            for t in s.content() {
                *freq.entry(t.as_str()).or_default() += 1;
            }
        }
        let eos_count = train.len() as u64;
        let mut unk_count = 0;
        let mut kept: Vec<(&str, u64)> = Vec::new();
        for (t, c) in freq {
            if c >= min_count.max(1) && t != END_MARKER && t != UNKNOWN_TOKEN {
                kept.push((t, c));
            } else {
                unk_count += c;
            }
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut tokens = vec![END_MARKER.to_string(), UNKNOWN_TOKEN.to_string()];
        let mut counts = vec![eos_count, unk_count];
        for (t, c) in kept {
            tokens.push(t.to_string());
            counts.push(c);
        }
        Ok(Self::from_parts(tokens, counts))
    }

    fn from_parts(tokens: Vec<String>, counts: Vec<u64>) -> Self {
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        Vocabulary { tokens, counts, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Index of `token`, or of `<unk>` when it is not in the vocabulary.
    pub fn id(&self, token: &str) -> u32 {
        if token == START_TOKEN {
            return self.start_id();
        }
        self.index.get(token).copied().unwrap_or(Self::UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// Input-only index used for left padding; one past the last token.
    pub fn start_id(&self) -> u32 {
        self.tokens.len() as u32
    }

    pub fn token(&self, id: u32) -> &str {
        if id == self.start_id() {
            return START_TOKEN;
        }
        &self.tokens[id as usize]
    }

    pub fn count(&self, id: u32) -> u64 {
        self.counts[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    /// `token \t index \t count` lines.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (i, (t, c)) in self.tokens.iter().zip(&self.counts).enumerate() {
            out.push_str(&format!("{t}\t{i}\t{c}\n"));
        }
        out
    }

    pub fn from_tsv_lines(lines: &[&str]) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut counts = Vec::new();
        for (n, line) in lines.iter().enumerate().filter(|(_, l)| !l.is_empty()) {
            let bad = |m: &str| Error::Format { what: "vocab.tsv", line: n + 1, message: m.to_string() };
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 3 {
                return Err(bad("expected token, index and count"));
            }
            let idx: usize = f[1].parse().map_err(|_| bad("bad index"))?;
            if idx != tokens.len() {
                return Err(bad("indices must be dense and ascending"));
            }
            tokens.push(f[0].to_string());
            counts.push(f[2].parse().map_err(|_| bad("bad count"))?);
        }
        if tokens.len() < 2 || tokens[0] != END_MARKER || tokens[1] != UNKNOWN_TOKEN {
            return Err(Error::Format { what: "vocab.tsv", line: 1, message: "missing reserved tokens".into() });
        }
        Ok(Self::from_parts(tokens, counts))
    }

    /// Content hash of the token list.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for t in &self.tokens {
            h.update(t.as_bytes());
            h.update([0u8]);
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
