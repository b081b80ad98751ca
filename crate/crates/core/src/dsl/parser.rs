use std::collections::BTreeMap;

use super::lexer::{Tok, Token};
use super::{ErrorKind, ParseError, SourceSpan, FORMAT_VERSION, MAX_ERRORS};
use crate::cf::CertaintyFactor;
use crate::kb::{
    normalize, Condition, Connective, Hypothesis, Indicator, IndicatorCategory, KnowledgeBase,
    KnowledgeKind, Relation, Rule, RuleId, Season, Severity, State, ValidationIssue,
};

struct Bail;

type Step<T> = Result<T, Bail>;

struct RuleSpans {
    rule: SourceSpan,
    premises: Vec<SourceSpan>,
}

pub(crate) struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    errors: Vec<ParseError>,
    kb: KnowledgeBase,
    indicator_spans: BTreeMap<String, SourceSpan>,
    rule_spans: BTreeMap<RuleId, RuleSpans>,
    mitigation_spans: BTreeMap<Severity, SourceSpan>,
}

fn is_top_level(tok: &Tok) -> bool {
    matches!(tok, Tok::Word(w) if matches!(w.as_str(), "indicator" | "rule" | "mitigation" | "kbformat"))
}

fn is_ident(word: &str) -> bool {
    let mut bytes = word.bytes();
    matches!(bytes.next(), Some(b) if b.is_ascii_alphanumeric() || b == b'_')
        && bytes.all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
}

/// `0`, `1`, or digits with an optional fraction of at most six digits.
fn parse_float(word: &str) -> Result<f64, &'static str> {
    let (int, frac) = match word.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (word, None),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return Err("expected a number");
    }
    if let Some(frac) = frac {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err("expected a number");
        }
        if frac.len() > 6 {
            return Err("numbers may have at most 6 fraction digits");
        }
    }
    word.parse::<f64>().map_err(|_| "expected a number")
}

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: &'a [Token], errors: Vec<ParseError>) -> Self {
        Parser {
            tokens,
            pos: 0,
            errors,
            kb: KnowledgeBase::new(),
            indicator_spans: BTreeMap::new(),
            rule_spans: BTreeMap::new(),
            mitigation_spans: BTreeMap::new(),
        }
    }

    fn full(&self) -> bool {
        self.errors.len() >= MAX_ERRORS
    }

    fn peek(&self) -> &Token {
        // The lexer always terminates the stream with Eof.
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn advance(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error(&mut self, span: SourceSpan, kind: ErrorKind, message: impl Into<String>) {
        if !self.full() {
            self.errors.push(ParseError::new(span, kind, message));
        }
    }

    fn semantic(&mut self, span: SourceSpan, issue: ValidationIssue) {
        if !self.full() {
            self.errors.push(ParseError::semantic(span, issue));
        }
    }

    fn unexpected(&mut self, expected: &str) -> Bail {
        let t = self.peek().clone();
        self.error(
            t.span,
            ErrorKind::Syntax,
            format!("expected {expected}, found {}", t.tok.describe()),
        );
        Bail
    }

    fn keyword(&mut self, kw: &str) -> Step<SourceSpan> {
        match &self.peek().tok {
            Tok::Word(w) if w == kw => Ok(self.advance().span),
            _ => Err(self.unexpected(&format!("`{kw}`"))),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Word(w) if w == kw)
    }

    fn punct(&mut self, want: Tok) -> Step<SourceSpan> {
        if self.peek().tok == want {
            Ok(self.advance().span)
        } else {
            Err(self.unexpected(&want.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> Step<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Word(w) if is_ident(w) => {
                let w = w.clone();
                Ok((w, self.advance().span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn string(&mut self, what: &str) -> Step<(String, SourceSpan)> {
        match &self.peek().tok {
            Tok::Str(s) => {
                let s = s.clone();
                Ok((s, self.advance().span))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn enumerated<T: std::str::FromStr>(&mut self, what: &str) -> Step<(T, SourceSpan)> {
        if let Tok::Word(w) = &self.peek().tok {
            if let Ok(v) = w.parse::<T>() {
                return Ok((v, self.advance().span));
            }
        }
        Err(self.unexpected(what))
    }

    fn number(&mut self) -> Step<(f64, SourceSpan)> {
        let t = self.peek().clone();
        match &t.tok {
            Tok::Word(w) => match parse_float(w) {
                Ok(v) => {
                    self.advance();
                    Ok((v, t.span))
                }
                Err(msg) => {
                    self.error(t.span, ErrorKind::Syntax, msg);
                    Err(Bail)
                }
            },
            _ => Err(self.unexpected("a number")),
        }
    }

    /// Skips to the next top-level keyword outside braces.
    fn recover_top(&mut self) {
        let mut depth = 0usize;
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                t if depth == 0 && is_top_level(t) => return,
                Tok::LBrace => depth += 1,
                Tok::RBrace => depth = depth.saturating_sub(1),
                _ => {}
            }
            self.advance();
        }
    }

    /// Skips past the `}` closing the current rule body.
    fn recover_rule(&mut self) {
        loop {
            match &self.peek().tok {
                Tok::Eof => return,
                Tok::RBrace => {
                    self.advance();
                    return;
                }
                t if matches!(t, Tok::Word(w) if w == "rule" || w == "indicator" || w == "mitigation") => {
                    return
                }
                _ => {
                    self.advance();
                }
            }
        }
    }

    pub(crate) fn parse(mut self) -> Result<KnowledgeBase, Vec<ParseError>> {
        if self.peek().tok == Tok::Eof {
            return self.finish();
        }

        if self.at_keyword("kbformat") {
            let _ = self.header();
        } else {
            let span = self.peek().span.clone();
            self.error(span, ErrorKind::Syntax, "missing `kbformat` header");
        }

        while !self.full() {
            let t = self.peek().clone();
            let outcome = match &t.tok {
                Tok::Eof => break,
                Tok::Word(w) if w == "indicator" => self.indicator(),
                Tok::Word(w) if w == "rule" => self.rule(),
                Tok::Word(w) if w == "mitigation" => self.mitigation(),
                Tok::Word(w) if w == "kbformat" => {
                    self.error(t.span.clone(), ErrorKind::Syntax, "duplicate `kbformat` header");
                    self.advance();
                    Ok(())
                }
                Tok::Word(w) if w == "assert" => {
                    self.error(
                        t.span.clone(),
                        ErrorKind::Semantic,
                        "`assert` is reserved and not supported",
                    );
                    self.advance();
                    Err(Bail)
                }
                _ => Err(self.unexpected("`indicator`, `rule` or `mitigation`")),
            };
            if outcome.is_err() {
                if self.peek().span == t.span {
                    self.advance();
                }
                self.recover_top();
            }
        }

        self.finish()
    }

    /// Parses a sequence of `rule` blocks on top of `base`, replacing base
    /// rules that share an id.
    pub(crate) fn parse_rules_into(mut self, base: KnowledgeBase) -> Result<KnowledgeBase, Vec<ParseError>> {
        let base_len = base.rules.len();
        self.kb = base;
        if self.peek().tok == Tok::Eof {
            let span = self.peek().span.clone();
            self.error(span, ErrorKind::Syntax, "expected at least one `rule`");
        }
        while !self.full() {
            let t = self.peek().clone();
            let outcome = match &t.tok {
                Tok::Eof => break,
                Tok::Word(w) if w == "rule" => self.rule(),
                _ => Err(self.unexpected("`rule`")),
            };
            if outcome.is_err() {
                if self.peek().span == t.span {
                    self.advance();
                }
                self.recover_top();
            }
        }
        let replaced = &self.rule_spans;
        let mut index = 0;
        self.kb.rules.retain(|r| {
            index += 1;
            index > base_len || !replaced.contains_key(&r.id)
        });
        self.finish()
    }

    fn header(&mut self) -> Step<()> {
        self.keyword("kbformat")?;
        let t = self.peek().clone();
        match &t.tok {
            Tok::Word(w) if !w.is_empty() && w.bytes().all(|b| b.is_ascii_digit()) => {
                self.advance();
                if w.parse::<u32>().ok() != Some(FORMAT_VERSION) {
                    self.error(
                        t.span,
                        ErrorKind::Semantic,
                        format!("unsupported kbformat version {w}; expected {FORMAT_VERSION}"),
                    );
                }
                Ok(())
            }
            _ => Err(self.unexpected("a format version number")),
        }
    }

    fn indicator(&mut self) -> Step<()> {
        let start = self.keyword("indicator")?;
        let (raw_name, name_span) = self.ident("an indicator name")?;
        self.keyword("category")?;
        let (category, _) = self.enumerated::<IndicatorCategory>(
            "a category (animal, plant, meteorological, astronomical)",
        )?;
        self.keyword("states")?;
        self.punct(Tok::LBracket)?;
        let mut states = Vec::new();
        let mut seen = BTreeMap::new();
        loop {
            let (relation, _) = self.enumerated::<Relation>("a verb (is, shows, appears, are)")?;
            let (value, value_span) = self.ident("a state value")?;
            let state = State::new(relation, &value);
            if seen.insert(state.value.clone(), ()).is_some() {
                self.semantic(
                    value_span,
                    ValidationIssue::DuplicateState {
                        indicator: normalize(&raw_name),
                        value: state.value.clone(),
                    },
                );
            } else {
                states.push(state);
            }
            if self.peek().tok == Tok::Comma {
                self.advance();
                continue;
            }
            self.punct(Tok::RBracket)?;
            break;
        }
        let alias = if self.at_keyword("alias") {
            self.advance();
            Some(self.string("an alias string")?.0)
        } else {
            None
        };

        let mut indicator = Indicator::new(&raw_name, category, states);
        indicator.alias = alias;
        if self.kb.catalog.contains_key(&indicator.name) {
            self.error(
                name_span,
                ErrorKind::Semantic,
                format!("indicator `{}` is declared more than once", indicator.name),
            );
        } else {
            self.indicator_spans.insert(indicator.name.clone(), start);
            self.kb.catalog.insert(indicator.name.clone(), indicator);
        }
        Ok(())
    }

    fn rule(&mut self) -> Step<()> {
        let start = self.keyword("rule")?;
        let (raw_id, _) = self.ident("a rule id")?;
        let id = RuleId::new(raw_id);
        self.punct(Tok::LBrace)?;
        match self.rule_body(&id, start) {
            Ok(()) => Ok(()),
            Err(Bail) => {
                self.recover_rule();
                Ok(())
            }
        }
    }

    fn rule_body(&mut self, id: &RuleId, start: SourceSpan) -> Step<()> {
        let mut premises = Vec::new();
        let mut premise_spans = Vec::new();
        let mut connective: Option<Connective> = None;
        let mut ok = true;

        loop {
            let t = self.peek().clone();
            let Tok::Word(w) = &t.tok else { break };
            let joiner = match w.as_str() {
                "if" => None,
                "and" => Some(Connective::And),
                "or" => Some(Connective::Or),
                "assert" => {
                    self.error(
                        t.span,
                        ErrorKind::Semantic,
                        "`assert` is reserved and not supported",
                    );
                    return Err(Bail);
                }
                _ => break,
            };
            match (premises.is_empty(), joiner) {
                (true, None) => {}
                (true, Some(_)) => {
                    self.error(
                        t.span.clone(),
                        ErrorKind::Syntax,
                        "the first premise must start with `if`",
                    );
                    ok = false;
                }
                (false, None) => {
                    self.error(
                        t.span.clone(),
                        ErrorKind::Syntax,
                        "only the first premise starts with `if`; use `and` or `or`",
                    );
                    ok = false;
                }
                (false, Some(c)) => match connective {
                    Some(prev) if prev != c => {
                        self.error(
                            t.span.clone(),
                            ErrorKind::Syntax,
                            "a rule cannot mix `and` and `or`",
                        );
                        ok = false;
                    }
                    _ => connective = Some(c),
                },
            }
            self.advance();
            let (object, _) = self.ident("an indicator name")?;
            let (relation, _) = self.enumerated::<Relation>("a verb (is, shows, appears, are)")?;
            let (value, _) = self.ident("a state value")?;
            premises.push(Condition::new(&object, relation, &value));
            premise_spans.push(t.span);
        }

        if premises.is_empty() {
            self.error(
                start.clone(),
                ErrorKind::Syntax,
                format!("rule {id} has no premises"),
            );
            ok = false;
        }

        if self.at_keyword("connective") {
            let kw = self.advance().span;
            let (c, _) = self.enumerated::<Connective>("`and` or `or`")?;
            match connective {
                Some(prev) if prev != c => {
                    self.error(
                        kw,
                        ErrorKind::Syntax,
                        "declared connective does not match the premises",
                    );
                    ok = false;
                }
                _ => connective = Some(c),
            }
        }

        self.keyword("then")?;
        let (statement, statement_span) = self.string("a conclusion string")?;
        let season = if self.at_keyword("season") {
            self.advance();
            let t = self.peek().clone();
            match &t.tok {
                Tok::Word(w) if w == "unspecified" => {
                    self.advance();
                    None
                }
                _ => {
                    Some(self.enumerated::<Season>("a season (spring, summer, autumn, winter, unspecified)")?.0)
                }
            }
        } else {
            None
        };
        self.keyword("cf")?;
        let (cf_value, cf_span) = self.number()?;
        let kind = if self.at_keyword("kind") {
            self.advance();
            self.enumerated::<KnowledgeKind>("a knowledge kind (derivation, factual, control)")?
                .0
        } else {
            KnowledgeKind::default()
        };
        if self.at_keyword("assert") {
            let span = self.peek().span.clone();
            self.error(span, ErrorKind::Semantic, "`assert` is reserved and not supported");
            return Err(Bail);
        }
        self.punct(Tok::RBrace)?;

        let conclusion = match Hypothesis::new(&statement, season) {
            Ok(h) => Some(h),
            Err(e) => {
                self.error(statement_span, ErrorKind::Semantic, e.to_string());
                None
            }
        };
        let expert_cf = match CertaintyFactor::new(cf_value) {
            Ok(cf) => Some(cf),
            Err(_) => {
                self.semantic(
                    cf_span,
                    ValidationIssue::CfOutOfRange {
                        rule: id.clone(),
                        value: cf_value,
                    },
                );
                None
            }
        };
        if !id.is_well_formed() {
            self.semantic(start.clone(), ValidationIssue::MalformedRuleId { rule: id.clone() });
            ok = false;
        }
        if self.rule_spans.contains_key(id) {
            self.semantic(start, ValidationIssue::DuplicateRuleId { rule: id.clone() });
            return Ok(());
        }

        if let (true, Some(conclusion), Some(expert_cf)) = (ok, conclusion, expert_cf) {
            let mut rule = Rule::new(
                id.clone(),
                premises,
                connective.unwrap_or(Connective::And),
                conclusion,
                expert_cf,
            );
            rule.kind = kind;
            self.kb.rules.push(rule);
        }
        self.rule_spans.insert(
            id.clone(),
            RuleSpans {
                rule: start,
                premises: premise_spans,
            },
        );
        Ok(())
    }

    fn mitigation(&mut self) -> Step<()> {
        let start = self.keyword("mitigation")?;
        let (severity, _) =
            self.enumerated::<Severity>("a severity (none, moderate, evidence)")?;
        let (text, _) = self.string("mitigation text")?;
        if self.mitigation_spans.contains_key(&severity) {
            self.error(
                start,
                ErrorKind::Semantic,
                format!("mitigation for `{severity}` is declared more than once"),
            );
        } else {
            self.mitigation_spans.insert(severity, start);
            self.kb.mitigations.insert(severity, text);
        }
        Ok(())
    }

    fn issue_span(&self, issue: &ValidationIssue) -> SourceSpan {
        if let Some(spans) = issue.rule().and_then(|id| self.rule_spans.get(id)) {
            return issue
                .position()
                .and_then(|p| spans.premises.get(p))
                .unwrap_or(&spans.rule)
                .clone();
        }
        match issue {
            ValidationIssue::MalformedIndicatorName { indicator }
            | ValidationIssue::EmptyStates { indicator }
            | ValidationIssue::DuplicateState { indicator, .. } => {
                if let Some(span) = self.indicator_spans.get(indicator) {
                    return span.clone();
                }
            }
            ValidationIssue::MissingMitigation { severity } => {
                // Point at the first rule that needs it.
                if let Some(span) = self
                    .kb
                    .rules
                    .iter()
                    .find(|r| r.conclusion.severity() == *severity)
                    .and_then(|r| self.rule_spans.get(&r.id))
                {
                    return span.rule.clone();
                }
            }
            ValidationIssue::UnexpectedMitigation { severity } => {
                if let Some(span) = self.mitigation_spans.get(severity) {
                    return span.clone();
                }
            }
            _ => {}
        }
        self.tokens[0].span.clone()
    }

    fn finish(mut self) -> Result<KnowledgeBase, Vec<ParseError>> {
        if !self.full() {
            let report = self.kb.validate();
            for issue in report.issues {
                let span = self.issue_span(&issue);
                self.semantic(span, issue);
            }
        }
        if self.errors.is_empty() {
            Ok(self.kb)
        } else {
            self.errors
                .sort_by(|a, b| (a.span.line, a.span.column).cmp(&(b.span.line, b.span.column)));
            self.errors.truncate(MAX_ERRORS);
            Err(self.errors)
        }
    }
}
