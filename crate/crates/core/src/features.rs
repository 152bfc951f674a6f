//! Method-level log-related features, computed either on the method as
//! written (`raw`) or with its logging statements excluded (`log_aware`).
//!
//! Counting rules:
//! - NTOK: identifiers, keywords and numbers count one each; string and char
//!   literals count their word fragments; punctuation is not counted.
//! - NOS: `;` at parenthesis depth 0 inside the block, plus the control
//!   headers `if else for while do switch try catch finally` (the `while` of
//!   a do-while is covered by its `;`).
//! - NEXP: `;`-terminated statements containing an assignment, increment or
//!   call, plus one per condition of `if`, `while`, `for` and `switch`.
//! - LMET / XMET: calls `name(` whose bare name is / is not declared in the
//!   same file. Constructor calls and nested declarations are not calls.
//! - SLOC: physical lines of the declaration, comments and braces included.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::method::header_block_open;
use crate::ingest::{strip_logs, MethodDefinition};
use crate::lexer::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Raw,
    LogAware,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureVector {
    pub method_id: String,
    pub mode: FeatureMode,
    pub elps: bool,
    pub ntok: u32,
    pub nos: u32,
    pub nexp: u32,
    pub lmet: u32,
    pub xmet: u32,
    pub sloc: u32,
    pub lwk: BTreeSet<String>,
}

impl FeatureVector {
    /// The numeric features in a fixed order: ntok, nos, nexp, lmet, xmet, sloc.
    pub fn numeric(&self) -> [u32; 6] {
        [self.ntok, self.nos, self.nexp, self.lmet, self.xmet, self.sloc]
    }

    pub fn same_counts(&self, other: &FeatureVector) -> bool {
        self.numeric() == other.numeric()
    }
}

pub const NUMERIC_FEATURES: [&str; 6] = ["ntok", "nos", "nexp", "lmet", "xmet", "sloc"];

/// Word fragments of a literal's content; escape sequences separate words.
fn literal_words(content: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut cur = String::new();
    let mut chars = content.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if chars.next() == Some('u') {
                chars.by_ref().take_while(|c| *c == 'u').count();
                // the remaining hex digits of the escape
                chars.by_ref().take(3).count();
            }
            if !cur.is_empty() {
                words.push(std::mem::take(&mut cur));
            }
        } else if c.is_alphanumeric() || c == '_' {
            cur.push(c);
        } else if !cur.is_empty() {
            words.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        words.push(cur);
    }
    words
}

/// The word tokens a source token contributes to NTOK and the token bag.
pub fn token_words(t: &Token) -> Vec<String> {
    match t.kind {
        TokenKind::Ident | TokenKind::Keyword | TokenKind::Number => vec![t.text.clone()],
        TokenKind::Str | TokenKind::Char => literal_words(t.literal_content().unwrap_or("")),
        TokenKind::Punct | TokenKind::LineComment | TokenKind::BlockComment => Vec::new(),
    }
}

/// Multiset of word tokens.
pub type TokenBag = BTreeMap<String, u32>;

pub fn token_bag(method: &MethodDefinition) -> TokenBag {
    let mut bag = TokenBag::new();
    for t in &method.body_tokens {
        for w in token_words(t) {
            *bag.entry(w).or_default() += 1;
        }
    }
    bag
}

const ASSIGN_OPS: &[&str] =
    &["=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=", "++", "--"];

fn is_call(toks: &[Token], i: usize) -> bool {
    toks[i].kind == TokenKind::Ident
        && toks.get(i + 1).is_some_and(|t| t.is_punct("("))
        && !(i > 0 && (toks[i - 1].is_keyword("new") || toks[i - 1].is_punct("@")))
}

fn matching_paren(toks: &[Token], open: usize) -> usize {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if t.is_punct("(") {
            depth += 1;
        } else if t.is_punct(")") {
            depth = depth.saturating_sub(1);
            if depth == 0 {
                return i;
            }
        }
    }
    toks.len().saturating_sub(1)
}

#[derive(Debug, Default, PartialEq, Eq)]
struct BlockCounts {
    nos: u32,
    nexp: u32,
    lmet: u32,
    xmet: u32,
}

fn count_block(toks: &[Token], local_names: &BTreeSet<String>) -> BlockCounts {
    let mut c = BlockCounts::default();

    for i in 0..toks.len() {
        if is_call(toks, i) && header_block_open(toks, i).is_none() {
            if local_names.contains(&toks[i].text) {
                c.lmet += 1;
            } else {
                c.xmet += 1;
            }
        }
    }

    // Paren depth and the open statement restart inside braces so that
    // statements of lambdas and anonymous classes passed as arguments count.
    let mut depth = 0i32;
    let mut saved_depths = Vec::new();
    let mut segment_has_expr = false;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match t.kind {
            TokenKind::Keyword if depth == 0 => match t.text.as_str() {
                "if" | "while" | "for" | "switch" | "catch" | "synchronized"
                    if toks.get(i + 1).is_some_and(|n| n.is_punct("(")) =>
                {
                    let close = matching_paren(toks, i + 1);
                    let do_tail = t.text == "while"
                        && toks.get(close + 1).is_some_and(|n| n.is_punct(";"));
                    if matches!(t.text.as_str(), "if" | "while" | "for" | "switch") {
                        c.nexp += 1;
                    }
                    if t.text != "synchronized" && !do_tail {
                        c.nos += 1;
                    }
                    segment_has_expr = false;
                    i = close + 1;
                    continue;
                }
                "else" | "do" | "try" | "finally" => {
                    c.nos += 1;
                    segment_has_expr = false;
                }
                _ => {}
            },
            TokenKind::Punct => match t.text.as_str() {
                "(" | "[" => depth += 1,
                ")" | "]" => depth -= 1,
                ";" if depth == 0 => {
                    c.nos += 1;
                    if segment_has_expr {
                        c.nexp += 1;
                    }
                    segment_has_expr = false;
                }
                "{" => {
                    saved_depths.push((depth, segment_has_expr));
                    depth = 0;
                    segment_has_expr = false;
                }
                "}" => {
                    (depth, segment_has_expr) = saved_depths.pop().unwrap_or((0, false));
                }
                op if ASSIGN_OPS.contains(&op) => segment_has_expr = true,
                _ => {}
            },
            TokenKind::Ident if toks.get(i + 1).is_some_and(|n| n.is_punct("(")) => {
                segment_has_expr = true;
            }
            _ => {}
        }
        i += 1;
    }
    c
}

fn raw_features(method: &MethodDefinition, local_names: &BTreeSet<String>) -> FeatureVector {
    let ntok = method.body_tokens.iter().map(|t| token_words(t).len() as u32).sum();
    let counts = count_block(method.block_tokens(), local_names);
    FeatureVector {
        method_id: method.id.clone(),
        mode: FeatureMode::Raw,
        elps: method.has_logs(),
        ntok,
        nos: counts.nos,
        nexp: counts.nexp,
        lmet: counts.lmet,
        xmet: counts.xmet,
        sloc: method.sloc(),
        lwk: method.log_statements.iter().map(|s| s.wrapper.clone()).collect(),
    }
}

/// Computes the feature vector of `method`. `local_names` are the method
/// names declared in the same compilation unit. In log-aware mode every
/// count is the raw count of the log-stripped method, `elps` is false and
/// `lwk` is empty; the vector keeps the original method's id.
pub fn extract_features(
    method: &MethodDefinition,
    local_names: &BTreeSet<String>,
    mode: FeatureMode,
) -> FeatureVector {
    match mode {
        FeatureMode::Raw => raw_features(method, local_names),
        FeatureMode::LogAware => {
            let stripped = strip_logs(method);
            FeatureVector {
                method_id: method.id.clone(),
                mode: FeatureMode::LogAware,
                ..raw_features(&stripped, local_names)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureDelta {
    pub ntok: i64,
    pub nos: i64,
    pub nexp: i64,
    pub lmet: i64,
    pub xmet: i64,
    pub sloc: i64,
    pub elps: (bool, bool),
    /// Symmetric difference of the wrapper sets.
    pub lwk: BTreeSet<String>,
}

impl FeatureDelta {
    pub fn is_zero(&self) -> bool {
        [self.ntok, self.nos, self.nexp, self.lmet, self.xmet, self.sloc] == [0; 6]
            && self.elps.0 == self.elps.1
            && self.lwk.is_empty()
    }
}

/// Per-feature differences `a - b`.
pub fn feature_delta(a: &FeatureVector, b: &FeatureVector) -> FeatureDelta {
    let d = |x: u32, y: u32| i64::from(x) - i64::from(y);
    FeatureDelta {
        ntok: d(a.ntok, b.ntok),
        nos: d(a.nos, b.nos),
        nexp: d(a.nexp, b.nexp),
        lmet: d(a.lmet, b.lmet),
        xmet: d(a.xmet, b.xmet),
        sloc: d(a.sloc, b.sloc),
        elps: (a.elps, b.elps),
        lwk: a.lwk.symmetric_difference(&b.lwk).cloned().collect(),
    }
}
