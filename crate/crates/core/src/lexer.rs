//! A small Java surface-syntax tokenizer.
//!
//! It recognizes enough of the lexical grammar to find method boundaries and
//! logging calls: identifiers and keywords, numeric/string/char/text-block
//! literals (with escapes), comments, and operators. It never fails; stray
//! characters come back as single-character punctuation.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TokenKind {
    Ident,
    Keyword,
    Number,
    Str,
    Char,
    Punct,
    LineComment,
    BlockComment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 1-based line of the first character.
    pub line: u32,
    /// Byte offsets into the lexed source.
    pub start: usize,
    pub end: usize,
}

impl Token {
    pub fn is_comment(&self) -> bool {
        matches!(self.kind, TokenKind::LineComment | TokenKind::BlockComment)
    }

    pub fn is_punct(&self, p: &str) -> bool {
        self.kind == TokenKind::Punct && self.text == p
    }

    pub fn is_keyword(&self, k: &str) -> bool {
        self.kind == TokenKind::Keyword && self.text == k
    }

    /// Line of the last character (differs from `line` for text blocks and
    /// block comments).
    pub fn end_line(&self) -> u32 {
        self.line + self.text.matches('\n').count() as u32
    }

    /// Content of a string or char literal without the quotes, escapes kept
    /// as written.
    pub fn literal_content(&self) -> Option<&str> {
        match self.kind {
            TokenKind::Str if self.text.starts_with("\"\"\"") && self.text.len() >= 6 => {
                Some(&self.text[3..self.text.len() - 3])
            }
            TokenKind::Str | TokenKind::Char if self.text.len() >= 2 => {
                Some(&self.text[1..self.text.len() - 1])
            }
            _ => None,
        }
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

pub const KEYWORDS: &[&str] = &[
    "abstract", "assert", "boolean", "break", "byte", "case", "catch", "char", "class", "const",
    "continue", "default", "do", "double", "else", "enum", "extends", "final", "finally", "float",
    "for", "goto", "if", "implements", "import", "instanceof", "int", "interface", "long",
    "native", "new", "package", "private", "protected", "public", "return", "short", "static",
    "strictfp", "super", "switch", "synchronized", "this", "throw", "throws", "transient", "try",
    "void", "volatile", "while", "true", "false", "null",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.contains(&word)
}

// Longest first so that maximal munch works by prefix test.
const OPERATORS: &[&str] = &[
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=",
    ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<", ">>",
];

/// Tokenizes `src`, numbering lines from `first_line`.
pub fn tokenize(src: &str, first_line: u32) -> Vec<Token> {
    Lexer { src, bytes: src.as_bytes(), pos: 0, line: first_line, out: Vec::new() }.run()
}

/// Tokenizes and drops comments.
pub fn code_tokens(src: &str, first_line: u32) -> Vec<Token> {
    tokenize(src, first_line).into_iter().filter(|t| !t.is_comment()).collect()
}

struct Lexer<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
    line: u32,
    out: Vec<Token>,
}

impl<'a> Lexer<'a> {
    fn run(mut self) -> Vec<Token> {
        while self.pos < self.bytes.len() {
            let c = self.peek_char();
            if c == '\n' {
                self.line += 1;
                self.pos += 1;
            } else if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else if self.starts_with("//") {
                let end = self.src[self.pos..].find('\n').map_or(self.src.len(), |i| self.pos + i);
                self.emit(TokenKind::LineComment, end);
            } else if self.starts_with("/*") {
                let end = self.src[self.pos + 2..]
                    .find("*/")
                    .map_or(self.src.len(), |i| self.pos + 2 + i + 2);
                self.emit(TokenKind::BlockComment, end);
            } else if self.starts_with("\"\"\"") {
                let end = self.scan_text_block();
                self.emit(TokenKind::Str, end);
            } else if c == '"' || c == '\'' {
                let end = self.scan_quoted(c);
                let kind = if c == '"' { TokenKind::Str } else { TokenKind::Char };
                self.emit(kind, end);
            } else if c.is_ascii_digit()
                || (c == '.' && self.bytes.get(self.pos + 1).is_some_and(u8::is_ascii_digit))
            {
                let end = self.scan_number();
                self.emit(TokenKind::Number, end);
            } else if c.is_alphabetic() || c == '_' || c == '$' {
                let mut end = self.pos;
                for ch in self.src[self.pos..].chars() {
                    if ch.is_alphanumeric() || ch == '_' || ch == '$' {
                        end += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                let kind = if is_keyword(&self.src[self.pos..end]) {
                    TokenKind::Keyword
                } else {
                    TokenKind::Ident
                };
                self.emit(kind, end);
            } else {
                let len = OPERATORS
                    .iter()
                    .find(|op| self.starts_with(op))
                    .map_or(c.len_utf8(), |op| op.len());
                self.emit(TokenKind::Punct, self.pos + len);
            }
        }
        self.out
    }

    fn peek_char(&self) -> char {
        self.src[self.pos..].chars().next().unwrap_or('\0')
    }

    fn starts_with(&self, s: &str) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn emit(&mut self, kind: TokenKind, end: usize) {
        let text = &self.src[self.pos..end];
        self.out.push(Token { kind, text: text.to_string(), line: self.line, start: self.pos, end });
        self.line += text.matches('\n').count() as u32;
        self.pos = end;
    }

    /// Ends at the closing quote, or at end of line for an unterminated literal.
    fn scan_quoted(&self, quote: char) -> usize {
        let mut i = self.pos + 1;
        while i < self.bytes.len() {
            match self.bytes[i] {
                b'\\' => i += 2,
                b'\n' => return i,
                b if b == quote as u8 => return i + 1,
                _ => i += 1,
            }
        }
        self.bytes.len()
    }

    fn scan_text_block(&self) -> usize {
        let mut i = self.pos + 3;
        while i < self.bytes.len() {
            if self.bytes[i] == b'\\' {
                i += 2;
            } else if self.src[i..].starts_with("\"\"\"") {
                return i + 3;
            } else {
                i += 1;
            }
        }
        self.bytes.len()
    }

    fn scan_number(&self) -> usize {
        let b = self.bytes;
        let hex = b[self.pos..].starts_with(b"0x") || b[self.pos..].starts_with(b"0X");
        let mut i = self.pos;
        while i < b.len() {
            let c = b[i];
            let exponent_sign = (c == b'+' || c == b'-')
                && i > self.pos
                && match b[i - 1] {
                    b'e' | b'E' => !hex,
                    b'p' | b'P' => hex,
                    _ => false,
                };
            if c.is_ascii_alphanumeric() || c == b'_' || c == b'.' || exponent_sign {
                i += 1;
            } else {
                break;
            }
        }
        i
    }
}
