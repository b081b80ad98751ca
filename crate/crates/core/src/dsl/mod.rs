//! The `.dkb` knowledge-base file format.
//!
//! ```text
//! kbformat 1
//!
//! indicator soil_moisture category meteorological states [is high, is low] alias "Soil moisture"
//!
//! rule RC5 {
//!   if soil_moisture is high
//!   then "No evidence of drought" cf 0.5
//! }
//!
//! mitigation evidence "..."
//! ```
//!
//! Parsing collects every lexical, syntax and semantic error (up to
//! [`MAX_ERRORS`]) instead of stopping at the first one, and never panics on
//! malformed input. [`serialize_kb`] writes the canonical form: rules sorted
//! by id, two-space indent, lowercase keywords, LF line endings.

mod lexer;
mod parser;
mod writer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cf::CertaintyFactor;
use crate::kb::{Condition, KnowledgeBase, Relation, ValidationIssue};

pub const FORMAT_VERSION: u32 = 1;
pub const MAX_ERRORS: usize = 100;

const DEFAULT_FILE: &str = "<input>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceSpan {
    pub file: String,
    /// 1-based.
    pub line: usize,
    /// 1-based, counted in characters.
    pub column: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorKind {
    Lex,
    Syntax,
    Semantic,
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ErrorKind::Lex => "lex",
            ErrorKind::Syntax => "syntax",
            ErrorKind::Semantic => "semantic",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseError {
    pub span: SourceSpan,
    pub kind: ErrorKind,
    pub message: String,
    /// The knowledge-base validation issue behind a semantic error, if any.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub issue: Option<ValidationIssue>,
}

impl ParseError {
    pub(crate) fn new(span: SourceSpan, kind: ErrorKind, message: impl Into<String>) -> Self {
        ParseError {
            span,
            kind,
            message: message.into(),
            issue: None,
        }
    }

    pub(crate) fn semantic(span: SourceSpan, issue: ValidationIssue) -> Self {
        ParseError {
            span,
            kind: ErrorKind::Semantic,
            message: issue.to_string(),
            issue: Some(issue),
        }
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {} error: {}", self.span, self.kind, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses `.dkb` text. An input holding only whitespace and comments is an
/// empty knowledge base; anything else needs the `kbformat` header.
pub fn parse_kb(text: &str) -> Result<KnowledgeBase, Vec<ParseError>> {
    parse_kb_named(DEFAULT_FILE, text)
}

/// Like [`parse_kb`], with `file` recorded in error spans.
pub fn parse_kb_named(file: &str, text: &str) -> Result<KnowledgeBase, Vec<ParseError>> {
    let mut errors = Vec::new();
    let tokens = lexer::tokenize(file, text, &mut errors);
    errors.truncate(MAX_ERRORS);
    parser::Parser::new(&tokens, errors).parse()
}

/// Parses raw bytes. Invalid UTF-8 is reported as a lexical error at the
/// first bad byte; the rest of the input is still parsed (lossily) so later
/// errors are reported too.
pub fn parse_kb_bytes(file: &str, bytes: &[u8]) -> Result<KnowledgeBase, Vec<ParseError>> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_kb_named(file, text),
        Err(e) => {
            let valid = &bytes[..e.valid_up_to()];
            // valid_up_to() is a char boundary, so this cannot fail.
            let prefix = std::str::from_utf8(valid).unwrap_or_default();
            let line = 1 + prefix.matches('\n').count();
            let column = 1 + prefix.rsplit('\n').next().map_or(0, |l| l.chars().count());
            let utf8_error = ParseError::new(
                SourceSpan {
                    file: file.to_string(),
                    line,
                    column,
                },
                ErrorKind::Lex,
                format!("invalid UTF-8 at byte offset {}", e.valid_up_to()),
            );
            let text = String::from_utf8_lossy(bytes);
            let mut errors = match parse_kb_named(file, &text) {
                Ok(_) => Vec::new(),
                Err(errors) => errors,
            };
            errors.insert(0, utf8_error);
            errors.truncate(MAX_ERRORS);
            Err(errors)
        }
    }
}

/// Parses one or more `rule` blocks (no header) and upserts them into a
/// copy of `base`. The result is validated as a whole.
pub fn parse_rules_into(
    base: &KnowledgeBase,
    file: &str,
    text: &str,
) -> Result<KnowledgeBase, Vec<ParseError>> {
    let mut errors = Vec::new();
    let tokens = lexer::tokenize(file, text, &mut errors);
    errors.truncate(MAX_ERRORS);
    parser::Parser::new(&tokens, errors).parse_rules_into(base.clone())
}

/// Canonical text for `kb`. Identical knowledge bases give identical bytes.
pub fn serialize_kb(kb: &KnowledgeBase) -> String {
    writer::serialize(kb)
}

/// Canonical rendering of a certainty factor as it appears in `.dkb` files.
pub fn format_cf(cf: CertaintyFactor) -> String {
    writer::format_cf(cf)
}

/// Parses an observation written as `<object> <verb> <value> [cf]`, e.g.
/// `soil_moisture is high 0.5`. The CF is `None` when omitted.
pub fn parse_observation(spec: &str) -> Result<(Condition, Option<CertaintyFactor>), String> {
    let parts: Vec<&str> = spec.split_whitespace().collect();
    let (object, verb, value, cf) = match parts.as_slice() {
        [o, v, val] => (*o, *v, *val, None),
        [o, v, val, cf] => (*o, *v, *val, Some(*cf)),
        _ => {
            return Err(format!(
                "expected `<object> <verb> <value> [cf]`, got `{spec}`"
            ))
        }
    };
    let relation: Relation = verb.parse().map_err(|e: crate::kb::UnknownKeyword| e.to_string())?;
    let cf = match cf {
        None => None,
        Some(raw) => {
            let v: f64 = raw
                .parse()
                .map_err(|_| format!("`{raw}` is not a certainty factor"))?;
            Some(CertaintyFactor::new(v).map_err(|e| e.to_string())?)
        }
    };
    Ok((Condition::new(object, relation, value), cf))
}
