use sha2::{Digest, Sha256};

use super::logs::{detect_in_tokens, LogStatement, LwkConfig};
use super::scan::SourceFile;
use crate::error::{Error, Result};
use crate::lexer::{code_tokens, Token, TokenKind};

/// Marker appended to the id of a log-stripped method.
pub const STRIPPED_MARKER: char = '\'';

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodDefinition {
    pub id: String,
    pub project: String,
    pub path: String,
    pub name: String,
    pub signature: String,
    /// Declaration text from the first modifier or annotation through the
    /// closing brace. Comments are kept.
    pub body_text: String,
    /// Code tokens of `body_text` (no comments), with file line numbers.
    pub body_tokens: Vec<Token>,
    pub line_span: (u32, u32),
    pub log_statements: Vec<LogStatement>,
}

pub fn method_id(project: &str, path: &str, start_line: u32, signature: &str) -> String {
    let digest = Sha256::digest(signature.as_bytes());
    let hash: String = digest.iter().take(4).map(|b| format!("{b:02x}")).collect();
    format!("{project}:{path}:{start_line}:{hash}")
}

impl MethodDefinition {
    /// Builds a method from its declaration text, detecting log statements
    /// with `lwk`.
    pub fn from_text(
        id: String,
        project: &str,
        path: &str,
        signature: String,
        body_text: String,
        start_line: u32,
        lwk: &LwkConfig,
    ) -> Self {
        let body_tokens = code_tokens(&body_text, start_line);
        let name = method_name(&body_tokens).unwrap_or_default();
        let log_statements = detect_in_tokens(&body_tokens, &body_text, lwk);
        let lines = body_text.split('\n').count().max(1) as u32;
        MethodDefinition {
            id,
            project: project.to_string(),
            path: path.to_string(),
            name,
            signature,
            body_text,
            body_tokens,
            line_span: (start_line, start_line + lines - 1),
            log_statements,
        }
    }

    pub fn has_logs(&self) -> bool {
        !self.log_statements.is_empty()
    }

    pub fn is_stripped(&self) -> bool {
        self.id.ends_with(STRIPPED_MARKER)
    }

    /// Id without the stripped marker.
    pub fn base_id(&self) -> &str {
        self.id.trim_end_matches(STRIPPED_MARKER)
    }

    /// Index of the `{` opening the method block.
    pub fn body_open(&self) -> usize {
        let mut depth = 0i32;
        for (i, t) in self.body_tokens.iter().enumerate() {
            match t.text.as_str() {
                "(" | "[" if t.kind == TokenKind::Punct => depth += 1,
                ")" | "]" if t.kind == TokenKind::Punct => depth -= 1,
                "{" if t.kind == TokenKind::Punct && depth == 0 => return i,
                _ => {}
            }
        }
        self.body_tokens.len()
    }

    /// Tokens strictly inside the method block.
    pub fn block_tokens(&self) -> &[Token] {
        let open = self.body_open();
        let n = self.body_tokens.len();
        if open + 1 >= n {
            return &[];
        }
        &self.body_tokens[open + 1..n - 1]
    }

    pub fn sloc(&self) -> u32 {
        self.line_span.1 - self.line_span.0 + 1
    }
}

fn method_name(toks: &[Token]) -> Option<String> {
    let mut depth = 0i32;
    let mut name = None;
    for (i, t) in toks.iter().enumerate() {
        if t.kind != TokenKind::Punct {
            continue;
        }
        match t.text.as_str() {
            "(" => {
                if depth == 0 && i > 0 && toks[i - 1].kind == TokenKind::Ident {
                    name = Some(toks[i - 1].text.clone());
                }
                depth += 1;
            }
            ")" => depth -= 1,
            "{" if depth == 0 => break,
            _ => {}
        }
    }
    name
}

/// Logging statements of `method` under the wrapper patterns `lwk`.
pub fn detect_log_statements(method: &MethodDefinition, lwk: &LwkConfig) -> Vec<LogStatement> {
    detect_in_tokens(&method.body_tokens, &method.body_text, lwk)
}

const MODIFIERS: &[&str] = &[
    "public", "private", "protected", "static", "final", "abstract", "synchronized", "native",
    "strictfp", "default", "void", "boolean", "byte", "char", "short", "int", "long", "float",
    "double",
];

fn may_precede_name(t: &Token) -> bool {
    match t.kind {
        TokenKind::Ident => true,
        TokenKind::Keyword => MODIFIERS.contains(&t.text.as_str()),
        TokenKind::Punct => matches!(t.text.as_str(), ">" | ">>" | ">>>" | "]" | "{" | "}" | ";" | ")"),
        _ => false,
    }
}

fn find_close(toks: &[Token], open: usize, o: &str, c: &str) -> Option<usize> {
    let mut depth = 0usize;
    for (i, t) in toks.iter().enumerate().skip(open) {
        if t.is_punct(o) {
            depth += 1;
        } else if t.is_punct(c) {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

/// If a method header starts with the name at `i`, returns the index of the
/// opening brace of its block.
pub(crate) fn header_block_open(toks: &[Token], i: usize) -> Option<usize> {
    if toks[i].kind != TokenKind::Ident || !toks.get(i + 1)?.is_punct("(") {
        return None;
    }
    if i == 0 || !may_precede_name(&toks[i - 1]) {
        return None;
    }
    let close = find_close(toks, i + 1, "(", ")")?;
    let mut k = close + 1;
    if toks.get(k)?.is_keyword("throws") {
        k += 1;
        while let Some(t) = toks.get(k) {
            let type_part = t.kind == TokenKind::Ident
                || matches!(t.text.as_str(), "." | "," | "<" | ">" | "?" | ">>")
                    && t.kind == TokenKind::Punct;
            if !type_part {
                break;
            }
            k += 1;
        }
    }
    toks.get(k)?.is_punct("{").then_some(k)
}

/// First token of the declaration whose name is at `name`: walks back over
/// modifiers, type and annotations.
fn declaration_start(toks: &[Token], name: usize) -> usize {
    let mut j = name;
    while j > 0 {
        let t = &toks[j - 1];
        if t.is_punct(";") || t.is_punct("{") || t.is_punct("}") {
            break;
        }
        if t.is_punct(")") {
            // Annotation arguments.
            let mut depth = 0usize;
            let mut k = j - 1;
            loop {
                if toks[k].is_punct(")") {
                    depth += 1;
                } else if toks[k].is_punct("(") {
                    depth -= 1;
                    if depth == 0 {
                        break;
                    }
                }
                if k == 0 {
                    break;
                }
                k -= 1;
            }
            j = k;
            continue;
        }
        j -= 1;
    }
    j
}

fn check_braces(file: &SourceFile, toks: &[Token]) -> Result<()> {
    let mut depth = 0i64;
    for t in toks {
        if t.is_punct("{") {
            depth += 1;
        } else if t.is_punct("}") {
            depth -= 1;
            if depth < 0 {
                break;
            }
        }
    }
    if depth != 0 {
        return Err(Error::UnbalancedBraces { path: file.path.clone() });
    }
    Ok(())
}

/// Extracts method and constructor definitions with bodies, in source order.
/// Methods of nested or anonymous classes inside a method body stay part of
/// the enclosing method. Initializer blocks are not methods.
pub fn extract_methods(file: &SourceFile, lwk: &LwkConfig) -> Result<Vec<MethodDefinition>> {
    let toks = code_tokens(&file.content, 1);
    check_braces(file, &toks)?;
    let mut out = Vec::new();
    let mut i = 0;
    while i < toks.len() {
        let Some(open) = header_block_open(&toks, i) else {
            i += 1;
            continue;
        };
        let Some(close) = find_close(&toks, open, "{", "}") else {
            return Err(Error::UnbalancedBraces { path: file.path.clone() });
        };
        let start = declaration_start(&toks, i);
        let text = file.content[toks[start].start..toks[close].end].to_string();
        let header = &file.content[toks[start].start..toks[open].start];
        let signature = header.split_whitespace().collect::<Vec<_>>().join(" ");
        let start_line = toks[start].line;
        let id = method_id(&file.project_id, &file.path, start_line, &signature);
        out.push(MethodDefinition::from_text(
            id,
            &file.project_id,
            &file.path,
            signature,
            text,
            start_line,
            lwk,
        ));
        i = close + 1;
    }
    Ok(out)
}

/// Removes every logging statement, dropping lines left blank by the
/// removal. Idempotent; the id gains the stripped marker.
pub fn strip_logs(method: &MethodDefinition) -> MethodDefinition {
    let mut id = method.id.clone();
    if !id.ends_with(STRIPPED_MARKER) {
        id.push(STRIPPED_MARKER);
    }
    if method.log_statements.is_empty() {
        return MethodDefinition { id, ..method.clone() };
    }

    let mut ranges: Vec<_> = method.log_statements.iter().map(|s| s.byte_range.clone()).collect();
    ranges.sort_by_key(|r| r.start);
    let removed = |pos: usize| ranges.iter().any(|r| r.contains(&pos));

    let text = &method.body_text;
    let mut out = String::with_capacity(text.len());
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        let line_end = line_start + line.len();
        let touched = ranges.iter().any(|r| r.start < line_end && r.end > line_start);
        let kept: String = line
            .char_indices()
            .filter(|(off, _)| !removed(line_start + off))
            .map(|(_, c)| c)
            .collect();
        if !(touched && kept.trim().is_empty()) {
            out.push_str(&kept);
        }
        line_start = line_end;
    }
    // A removed final line may leave a trailing newline behind.
    if !text.ends_with('\n') {
        while out.ends_with('\n') || out.ends_with('\r') {
            out.pop();
        }
    }

    let body_tokens = code_tokens(&out, method.line_span.0);
    let lines = out.split('\n').count().max(1) as u32;
    MethodDefinition {
        id,
        project: method.project.clone(),
        path: method.path.clone(),
        name: method.name.clone(),
        signature: method.signature.clone(),
        body_text: out,
        body_tokens,
        line_span: (method.line_span.0, method.line_span.0 + lines - 1),
        log_statements: Vec::new(),
    }
}
