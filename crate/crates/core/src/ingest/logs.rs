use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::lexer::{Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Trace,
    Debug,
    Info,
    Warn,
    Error,
    Fatal,
    Unknown,
}

impl Level {
    pub fn as_str(self) -> &'static str {
        match self {
            Level::Trace => "trace",
            Level::Debug => "debug",
            Level::Info => "info",
            Level::Warn => "warn",
            Level::Error => "error",
            Level::Fatal => "fatal",
            Level::Unknown => "unknown",
        }
    }

    /// Parses a logging method name; `warning` is accepted as `warn`.
    pub fn from_method(name: &str) -> Option<Level> {
        match name.to_ascii_lowercase().as_str() {
            "trace" => Some(Level::Trace),
            "debug" => Some(Level::Debug),
            "info" => Some(Level::Info),
            "warn" | "warning" => Some(Level::Warn),
            "error" => Some(Level::Error),
            "fatal" => Some(Level::Fatal),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "unknown" {
            return Ok(Level::Unknown);
        }
        Level::from_method(s).ok_or_else(|| format!("unknown level {s:?}"))
    }
}

/// Logging wrapper patterns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LwkConfig {
    /// Receiver names, matched case-insensitively (`LOG.debug`, `logger.info`).
    pub receivers: Vec<String>,
    /// Bare wrapper calls such as `log(Level.INFO, "...")`.
    pub bare_wrappers: Vec<String>,
}

impl Default for LwkConfig {
    fn default() -> Self {
        Self {
            receivers: vec!["log".into(), "logger".into(), "mylogger".into()],
            bare_wrappers: Vec::new(),
        }
    }
}

impl LwkConfig {
    pub fn is_empty(&self) -> bool {
        self.receivers.is_empty() && self.bare_wrappers.is_empty()
    }

    fn is_receiver(&self, name: &str) -> bool {
        self.receivers.iter().any(|r| r.eq_ignore_ascii_case(name))
    }

    fn is_bare(&self, name: &str) -> bool {
        self.bare_wrappers.iter().any(|r| r.eq_ignore_ascii_case(name))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogStatement {
    pub wrapper: String,
    pub level: Level,
    pub description_raw: String,
    pub argument_exprs: Vec<String>,
    /// First and last line in the file.
    pub span: (u32, u32),
    /// Byte range within the owning method's text.
    pub byte_range: Range<usize>,
}

fn matching_close(toks: &[Token], open: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
                if depth < 0 {
                    return None;
                }
            }
            _ => {}
        }
    }
    None
}

/// Finds logging statements in a code-token stream (comments removed).
/// Byte offsets in the result refer to the text the tokens were lexed from.
pub fn detect_in_tokens(toks: &[Token], src: &str, lwk: &LwkConfig) -> Vec<LogStatement> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        match match_call(toks, i, lwk) {
            Some(call) => {
                let stmt = parse_statement(toks, src, i, call);
                i = stmt.1;
                out.push(stmt.0);
            }
            None => i += 1,
        }
    }
    out
}

struct CallHead {
    wrapper: String,
    level: Option<Level>,
    open_paren: usize,
    bare: bool,
}

fn match_call(toks: &[Token], i: usize, lwk: &LwkConfig) -> Option<CallHead> {
    let t = &toks[i];
    if t.kind != TokenKind::Ident {
        return None;
    }
    let after_dot = i > 0 && toks[i - 1].is_punct(".");
    if lwk.is_receiver(&t.text)
        && toks.get(i + 1).is_some_and(|d| d.is_punct("."))
        && toks.get(i + 3).is_some_and(|p| p.is_punct("("))
    {
        let method = &toks[i + 2];
        if method.kind == TokenKind::Ident {
            if let Some(level) = Level::from_method(&method.text) {
                return Some(CallHead {
                    wrapper: format!("{}.{}", t.text, method.text),
                    level: Some(level),
                    open_paren: i + 3,
                    bare: false,
                });
            }
        }
    }
    if !after_dot && lwk.is_bare(&t.text) && toks.get(i + 1).is_some_and(|p| p.is_punct("(")) {
        return Some(CallHead { wrapper: t.text.clone(), level: None, open_paren: i + 1, bare: true });
    }
    None
}

/// Returns the statement and the index just past it.
fn parse_statement(toks: &[Token], src: &str, at: usize, call: CallHead) -> (LogStatement, usize) {
    // Qualified receivers: `this.LOG.info(...)`, `Foo.LOG.info(...)`.
    let mut start = at;
    while start >= 2
        && toks[start - 1].is_punct(".")
        && (toks[start - 2].kind == TokenKind::Ident || toks[start - 2].is_keyword("this"))
    {
        start -= 2;
    }

    let close = matching_close(toks, call.open_paren);
    let semi = close.and_then(|c| find_terminator(toks, c + 1));
    let (Some(close), Some(semi)) = (close, semi) else {
        // Unreadable: take tokens up to the end of the enclosing block.
        let last = last_before_block_end(toks, at);
        let stmt = LogStatement {
            wrapper: call.wrapper,
            level: Level::Unknown,
            description_raw: String::new(),
            argument_exprs: Vec::new(),
            span: (toks[start].line, toks[last].end_line()),
            byte_range: toks[start].start..toks[last].end,
        };
        return (stmt, last + 1);
    };

    let args = split_args(&toks[call.open_paren + 1..close]);
    let mut level = call.level;
    let mut skip_first = false;
    if call.bare {
        if let Some(first) = args.first() {
            if let Some(last) = first.last() {
                if last.kind == TokenKind::Ident {
                    if let Some(l) = Level::from_method(&last.text) {
                        level = Some(l);
                        skip_first = true;
                    }
                }
            }
        }
    }

    let mut description = String::new();
    let mut exprs = Vec::new();
    for arg in args.iter().skip(usize::from(skip_first)) {
        for operand in split_concat(arg) {
            if operand.len() == 1 && matches!(operand[0].kind, TokenKind::Str | TokenKind::Char) {
                description.push_str(operand[0].literal_content().unwrap_or(""));
            } else if let (Some(first), Some(last)) = (operand.first(), operand.last()) {
                exprs.push(src[first.start..last.end].trim().to_string());
            }
        }
    }

    let stmt = LogStatement {
        wrapper: call.wrapper,
        level: level.unwrap_or(Level::Unknown),
        description_raw: description,
        argument_exprs: exprs,
        span: (toks[start].line, toks[semi].end_line()),
        byte_range: toks[start].start..toks[semi].end,
    };
    (stmt, semi + 1)
}

fn find_terminator(toks: &[Token], from: usize) -> Option<usize> {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().skip(from) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth < 0 {
                    return None;
                }
            }
            ";" if depth == 0 => return Some(i),
            _ => {}
        }
    }
    None
}

fn last_before_block_end(toks: &[Token], from: usize) -> usize {
    let mut depth = 0i32;
    for (i, t) in toks.iter().enumerate().skip(from) {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => {
                depth -= 1;
                if depth < 0 {
                    return i.saturating_sub(1).max(from);
                }
            }
            _ => {}
        }
    }
    toks.len() - 1
}

fn split_top_level<'t>(toks: &'t [Token], sep: &str) -> Vec<&'t [Token]> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut begin = 0;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => depth += 1,
            ")" | "]" | "}" => depth -= 1,
            s if s == sep && depth == 0 => {
                parts.push(&toks[begin..i]);
                begin = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&toks[begin..]);
    parts
}

fn split_args(toks: &[Token]) -> Vec<&[Token]> {
    if toks.is_empty() {
        return Vec::new();
    }
    split_top_level(toks, ",")
}

/// Splits a string concatenation into its operands. Arguments without a
/// top-level string literal are kept whole.
fn split_concat(arg: &[Token]) -> Vec<&[Token]> {
    let operands = split_top_level(arg, "+");
    let has_literal = operands
        .iter()
        .any(|o| o.len() == 1 && matches!(o[0].kind, TokenKind::Str | TokenKind::Char));
    if has_literal && operands.iter().all(|o| !o.is_empty()) {
        operands
    } else {
        vec![arg]
    }
}
