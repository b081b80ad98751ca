//! Knowledge-base domain model: the indicator catalog, O-A-V conditions,
//! rules, hypotheses and mitigation texts, plus structural validation.
//!
//! A [`KnowledgeBase`] is a value. Editing operations take `&self` and hand
//! back a new, re-validated knowledge base, so a snapshot that a consultation
//! is pinned to never changes underneath it.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{CertaintyFactor, CfError};

/// Canonical form for indicator names and state values: trimmed, lowercase,
/// whitespace runs replaced by a single underscore.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join("_")
}

macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident, $what:literal { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = UnknownKeyword;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().as_str() {
                    $($text => Ok($name::$variant),)+
                    _ => Err(UnknownKeyword { what: $what, found: s.to_string() }),
                }
            }
        }
    };
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {what} `{found}`")]
pub struct UnknownKeyword {
    pub what: &'static str,
    pub found: String,
}

keyword_enum!(
    /// The four families of natural indicators.
    IndicatorCategory, "category" {
        Animal => "animal",
        Plant => "plant",
        Meteorological => "meteorological",
        Astronomical => "astronomical",
    }
);

keyword_enum!(
    /// Verb joining an object to its state. All verbs mean "has state"
    /// when matching; the original verb is kept for display.
    Relation, "verb" {
        Is => "is",
        Shows => "shows",
        Appears => "appears",
        Are => "are",
    }
);

keyword_enum!(
    Connective, "connective" {
        And => "and",
        Or => "or",
    }
);

keyword_enum!(
    /// Ordered so that `Evidence > Moderate > NoEvidence`.
    Severity, "severity" {
        NoEvidence => "none",
        Moderate => "moderate",
        Evidence => "evidence",
    }
);

keyword_enum!(
    Season, "season" {
        Spring => "spring",
        Summer => "summer",
        Autumn => "autumn",
        Winter => "winter",
    }
);

keyword_enum!(
    /// Metadata only; has no effect on inference.
    KnowledgeKind, "knowledge kind" {
        Derivation => "derivation",
        Factual => "factual",
        Control => "control",
    }
);

impl Default for KnowledgeKind {
    fn default() -> Self {
        KnowledgeKind::Derivation
    }
}

impl Severity {
    /// Whether advisories of this severity carry mitigation guidance.
    pub fn needs_mitigation(self) -> bool {
        self != Severity::NoEvidence
    }
}

/// Rule identifier such as `RC21`. Ordered naturally, so `RC2 < RC10`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RuleId(String);

impl RuleId {
    pub fn new(id: impl Into<String>) -> Self {
        RuleId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Rule ids are non-empty runs of ASCII letters, digits, `_` and `-`.
    pub fn is_well_formed(&self) -> bool {
        !self.0.is_empty()
            && self
                .0
                .bytes()
                .all(|b| b.is_ascii_alphanumeric() || b == b'_' || b == b'-')
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for RuleId {
    fn from(s: &str) -> Self {
        RuleId::new(s)
    }
}

impl Ord for RuleId {
    fn cmp(&self, other: &Self) -> Ordering {
        natural_cmp(&self.0, &other.0).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for RuleId {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Compares digit runs numerically and everything else bytewise.
fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut a, mut b) = (a.as_bytes(), b.as_bytes());
    loop {
        match (a.first(), b.first()) {
            (None, None) => return Ordering::Equal,
            (None, Some(_)) => return Ordering::Less,
            (Some(_), None) => return Ordering::Greater,
            (Some(x), Some(y)) if x.is_ascii_digit() && y.is_ascii_digit() => {
                let da = a.iter().take_while(|c| c.is_ascii_digit()).count();
                let db = b.iter().take_while(|c| c.is_ascii_digit()).count();
                let (na, nb) = (strip_zeros(&a[..da]), strip_zeros(&b[..db]));
                let ord = na.len().cmp(&nb.len()).then_with(|| na.cmp(nb));
                if ord != Ordering::Equal {
                    return ord;
                }
                a = &a[da..];
                b = &b[db..];
            }
            (Some(x), Some(y)) => {
                if x != y {
                    return x.cmp(y);
                }
                a = &a[1..];
                b = &b[1..];
            }
        }
    }
}

fn strip_zeros(d: &[u8]) -> &[u8] {
    let n = d.iter().take_while(|&&c| c == b'0').count();
    &d[n.min(d.len().saturating_sub(1))..]
}

/// One state an indicator may be observed in, e.g. `shows wilting`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct State {
    pub relation: Relation,
    pub value: String,
}

impl State {
    pub fn new(relation: Relation, value: &str) -> Self {
        State {
            relation,
            value: normalize(value),
        }
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.relation, self.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Indicator {
    pub name: String,
    pub category: IndicatorCategory,
    pub states: Vec<State>,
    /// Original-case label when it differs from the canonical name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
}

impl Indicator {
    pub fn new(name: &str, category: IndicatorCategory, states: Vec<State>) -> Self {
        Indicator {
            name: normalize(name),
            category,
            states,
            alias: None,
        }
    }

    pub fn with_alias(mut self, alias: impl Into<String>) -> Self {
        self.alias = Some(alias.into());
        self
    }

    pub fn display_name(&self) -> String {
        if let Some(alias) = &self.alias {
            return alias.clone();
        }
        let spaced = self.name.replace('_', " ");
        let mut chars = spaced.chars();
        match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        }
    }

    pub fn allows(&self, value: &str) -> bool {
        self.states.iter().any(|s| s.value == value)
    }
}

/// Working-memory key: the relation verb does not take part in matching.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FactKey {
    pub object: String,
    pub value: String,
}

impl FactKey {
    pub fn new(object: &str, value: &str) -> Self {
        FactKey {
            object: normalize(object),
            value: normalize(value),
        }
    }
}

impl fmt::Display for FactKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.object, self.value)
    }
}

/// An object-attribute-value triple such as `soil_moisture is high`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Condition {
    pub object: String,
    pub relation: Relation,
    pub value: String,
}

impl Condition {
    pub fn new(object: &str, relation: Relation, value: &str) -> Self {
        Condition {
            object: normalize(object),
            relation,
            value: normalize(value),
        }
    }

    pub fn key(&self) -> FactKey {
        FactKey {
            object: self.object.clone(),
            value: self.value.clone(),
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.object, self.relation, self.value)
    }
}

/// A rule conclusion. The severity is derived from the statement family.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "HypothesisRepr")]
pub struct Hypothesis {
    statement: String,
    season: Option<Season>,
    severity: Severity,
}

#[derive(Deserialize)]
struct HypothesisRepr {
    statement: String,
    #[serde(default)]
    season: Option<Season>,
}

impl TryFrom<HypothesisRepr> for Hypothesis {
    type Error = KbError;

    fn try_from(r: HypothesisRepr) -> Result<Self, Self::Error> {
        Hypothesis::new(&r.statement, r.season)
    }
}

const FAMILIES: &[(&str, Severity)] = &[
    ("no evidence of drought", Severity::NoEvidence),
    ("moderate evidence of drought", Severity::Moderate),
    ("evidence of drought", Severity::Evidence),
];

impl Hypothesis {
    /// Canonicalizes `statement` to sentence case with single spaces and
    /// classifies it into one of the three conclusion families.
    pub fn new(statement: &str, season: Option<Season>) -> Result<Self, KbError> {
        let collapsed = statement.split_whitespace().collect::<Vec<_>>().join(" ");
        let lower = collapsed.to_lowercase();
        let severity = FAMILIES
            .iter()
            .find(|(prefix, _)| lower.starts_with(prefix))
            .map(|&(_, sev)| sev)
            .ok_or_else(|| KbError::UnknownConclusion(statement.to_string()))?;
        let mut chars = lower.chars();
        let statement = match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
        Ok(Hypothesis {
            statement,
            season,
            severity,
        })
    }

    pub fn statement(&self) -> &str {
        &self.statement
    }

    pub fn season(&self) -> Option<Season> {
        self.season
    }

    pub fn severity(&self) -> Severity {
        self.severity
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.statement)?;
        if let Some(season) = self.season {
            write!(f, ", onset of {season}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub id: RuleId,
    pub premises: Vec<Condition>,
    pub connective: Connective,
    pub conclusion: Hypothesis,
    pub expert_cf: CertaintyFactor,
    #[serde(default)]
    pub kind: KnowledgeKind,
}

impl Rule {
    pub fn new(
        id: impl Into<RuleId>,
        premises: Vec<Condition>,
        connective: Connective,
        conclusion: Hypothesis,
        expert_cf: CertaintyFactor,
    ) -> Self {
        Rule {
            id: id.into(),
            premises,
            connective,
            conclusion,
            expert_cf,
            kind: KnowledgeKind::default(),
        }
    }
}

impl From<String> for RuleId {
    fn from(s: String) -> Self {
        RuleId(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum ValidationIssue {
    UnknownIndicator {
        rule: RuleId,
        position: usize,
        object: String,
    },
    IllegalState {
        rule: RuleId,
        position: usize,
        object: String,
        value: String,
    },
    DuplicateRuleId {
        rule: RuleId,
    },
    MalformedRuleId {
        rule: RuleId,
    },
    CfOutOfRange {
        rule: RuleId,
        value: f64,
    },
    CfTooPrecise {
        rule: RuleId,
        value: f64,
    },
    EmptyPremises {
        rule: RuleId,
    },
    DuplicatePremise {
        rule: RuleId,
        position: usize,
        object: String,
        value: String,
    },
    MalformedIndicatorName {
        indicator: String,
    },
    EmptyStates {
        indicator: String,
    },
    DuplicateState {
        indicator: String,
        value: String,
    },
    MissingMitigation {
        severity: Severity,
    },
    UnexpectedMitigation {
        severity: Severity,
    },
}

/// Issue classes, for callers that only care about what went wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IssueKind {
    UnknownIndicator,
    IllegalState,
    DuplicateRuleId,
    MalformedRuleId,
    CfOutOfRange,
    CfTooPrecise,
    EmptyPremises,
    DuplicatePremise,
    MalformedIndicatorName,
    EmptyStates,
    DuplicateState,
    MissingMitigation,
    UnexpectedMitigation,
}

impl ValidationIssue {
    pub fn kind(&self) -> IssueKind {
        use ValidationIssue as V;
        match self {
            V::UnknownIndicator { .. } => IssueKind::UnknownIndicator,
            V::IllegalState { .. } => IssueKind::IllegalState,
            V::DuplicateRuleId { .. } => IssueKind::DuplicateRuleId,
            V::MalformedRuleId { .. } => IssueKind::MalformedRuleId,
            V::CfOutOfRange { .. } => IssueKind::CfOutOfRange,
            V::CfTooPrecise { .. } => IssueKind::CfTooPrecise,
            V::EmptyPremises { .. } => IssueKind::EmptyPremises,
            V::DuplicatePremise { .. } => IssueKind::DuplicatePremise,
            V::MalformedIndicatorName { .. } => IssueKind::MalformedIndicatorName,
            V::EmptyStates { .. } => IssueKind::EmptyStates,
            V::DuplicateState { .. } => IssueKind::DuplicateState,
            V::MissingMitigation { .. } => IssueKind::MissingMitigation,
            V::UnexpectedMitigation { .. } => IssueKind::UnexpectedMitigation,
        }
    }

    /// The rule the issue is about, if any.
    pub fn rule(&self) -> Option<&RuleId> {
        use ValidationIssue as V;
        match self {
            V::UnknownIndicator { rule, .. }
            | V::IllegalState { rule, .. }
            | V::DuplicateRuleId { rule }
            | V::MalformedRuleId { rule }
            | V::CfOutOfRange { rule, .. }
            | V::CfTooPrecise { rule, .. }
            | V::EmptyPremises { rule }
            | V::DuplicatePremise { rule, .. } => Some(rule),
            _ => None,
        }
    }

    /// Zero-based premise position within the rule, if any.
    pub fn position(&self) -> Option<usize> {
        match self {
            ValidationIssue::UnknownIndicator { position, .. }
            | ValidationIssue::IllegalState { position, .. }
            | ValidationIssue::DuplicatePremise { position, .. } => Some(*position),
            _ => None,
        }
    }
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use ValidationIssue as V;
        match self {
            V::UnknownIndicator {
                rule,
                position,
                object,
            } => write!(f, "rule {rule}, premise {}: unknown indicator `{object}`", position + 1),
            V::IllegalState {
                rule,
                position,
                object,
                value,
            } => write!(
                f,
                "rule {rule}, premise {}: `{value}` is not a legal state of `{object}`",
                position + 1
            ),
            V::DuplicateRuleId { rule } => write!(f, "duplicate rule id {rule}"),
            V::MalformedRuleId { rule } => write!(f, "malformed rule id `{rule}`"),
            V::CfOutOfRange { rule, value } => {
                write!(f, "rule {rule}: certainty factor {value} is outside [0, 1]")
            }
            V::CfTooPrecise { rule, value } => {
                write!(f, "rule {rule}: certainty factor {value} has more than 6 decimals")
            }
            V::EmptyPremises { rule } => write!(f, "rule {rule} has no premises"),
            V::DuplicatePremise {
                rule,
                position,
                object,
                value,
            } => write!(
                f,
                "rule {rule}, premise {}: `{object} {value}` repeats an earlier premise",
                position + 1
            ),
            V::MalformedIndicatorName { indicator } => {
                write!(f, "indicator name `{indicator}` is not in canonical form")
            }
            V::EmptyStates { indicator } => write!(f, "indicator {indicator} has no states"),
            V::DuplicateState { indicator, value } => {
                write!(f, "indicator {indicator} lists state `{value}` twice")
            }
            V::MissingMitigation { severity } => {
                write!(f, "no mitigation text for severity `{severity}`")
            }
            V::UnexpectedMitigation { severity } => {
                write!(f, "severity `{severity}` does not take mitigation text")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }

    pub fn kinds(&self) -> Vec<IssueKind> {
        self.issues.iter().map(ValidationIssue::kind).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum KbError {
    #[error("knowledge base would be invalid: {}", .0.issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(ValidationReport),
    #[error("indicator `{indicator}` is still referenced by rule(s) {}", join_ids(.rules))]
    IndicatorInUse {
        indicator: String,
        rules: Vec<RuleId>,
    },
    #[error("no rule with id {0}")]
    UnknownRule(RuleId),
    #[error("no indicator named `{0}`")]
    UnknownIndicator(String),
    #[error("`{0}` is not a recognised conclusion")]
    UnknownConclusion(String),
    #[error(transparent)]
    Cf(#[from] CfError),
}

fn join_ids(ids: &[RuleId]) -> String {
    ids.iter().map(RuleId::as_str).collect::<Vec<_>>().join(", ")
}

/// Why a condition does not fit the catalog.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConditionError {
    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),
    #[error("`{value}` is not a legal state of `{object}`")]
    IllegalState { object: String, value: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KnowledgeBase {
    pub catalog: BTreeMap<String, Indicator>,
    /// Storage order is not significant; equality and inference both use
    /// ascending rule-id order.
    pub rules: Vec<Rule>,
    pub mitigations: BTreeMap<Severity, String>,
}

impl PartialEq for KnowledgeBase {
    fn eq(&self, other: &Self) -> bool {
        self.catalog == other.catalog
            && self.mitigations == other.mitigations
            && self.rules.len() == other.rules.len()
            && self
                .rules_sorted()
                .into_iter()
                .zip(other.rules_sorted())
                .all(|(a, b)| a == b)
    }
}

impl KnowledgeBase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn catalog_size(&self) -> usize {
        self.catalog.len()
    }

    pub fn indicator(&self, name: &str) -> Option<&Indicator> {
        self.catalog.get(name)
    }

    pub fn rule(&self, id: &RuleId) -> Option<&Rule> {
        self.rules.iter().find(|r| &r.id == id)
    }

    /// Rules in ascending id order (stable for duplicate ids).
    pub fn rules_sorted(&self) -> Vec<&Rule> {
        let mut rules: Vec<&Rule> = self.rules.iter().collect();
        rules.sort_by(|a, b| a.id.cmp(&b.id));
        rules
    }

    pub fn mitigation(&self, severity: Severity) -> Option<&str> {
        self.mitigations.get(&severity).map(String::as_str)
    }

    /// Checks that `condition` names a catalog indicator in one of its states.
    pub fn check_condition(&self, condition: &Condition) -> Result<(), ConditionError> {
        let indicator = self
            .catalog
            .get(&condition.object)
            .ok_or_else(|| ConditionError::UnknownIndicator(condition.object.clone()))?;
        if indicator.allows(&condition.value) {
            Ok(())
        } else {
            Err(ConditionError::IllegalState {
                object: condition.object.clone(),
                value: condition.value.clone(),
            })
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();

        for (key, ind) in &self.catalog {
            if key != &ind.name || ind.name.is_empty() || normalize(&ind.name) != ind.name {
                issues.push(ValidationIssue::MalformedIndicatorName {
                    indicator: ind.name.clone(),
                });
            }
            if ind.states.is_empty() {
                issues.push(ValidationIssue::EmptyStates {
                    indicator: ind.name.clone(),
                });
            }
            let mut seen = BTreeSet::new();
            for s in &ind.states {
                if !seen.insert(&s.value) {
                    issues.push(ValidationIssue::DuplicateState {
                        indicator: ind.name.clone(),
                        value: s.value.clone(),
                    });
                }
            }
        }

        let mut ids = BTreeSet::new();
        let mut concluded = BTreeSet::new();
        for rule in &self.rules {
            if !ids.insert(&rule.id) {
                issues.push(ValidationIssue::DuplicateRuleId {
                    rule: rule.id.clone(),
                });
            }
            if !rule.id.is_well_formed() {
                issues.push(ValidationIssue::MalformedRuleId {
                    rule: rule.id.clone(),
                });
            }
            if !rule.expert_cf.fits_six_decimals() {
                issues.push(ValidationIssue::CfTooPrecise {
                    rule: rule.id.clone(),
                    value: rule.expert_cf.value(),
                });
            }
            if rule.premises.is_empty() {
                issues.push(ValidationIssue::EmptyPremises {
                    rule: rule.id.clone(),
                });
            }
            let mut keys = BTreeSet::new();
            for (position, premise) in rule.premises.iter().enumerate() {
                match self.check_condition(premise) {
                    Ok(()) => {}
                    Err(ConditionError::UnknownIndicator(object)) => {
                        issues.push(ValidationIssue::UnknownIndicator {
                            rule: rule.id.clone(),
                            position,
                            object,
                        })
                    }
                    Err(ConditionError::IllegalState { object, value }) => {
                        issues.push(ValidationIssue::IllegalState {
                            rule: rule.id.clone(),
                            position,
                            object,
                            value,
                        })
                    }
                }
                if !keys.insert(premise.key()) {
                    issues.push(ValidationIssue::DuplicatePremise {
                        rule: rule.id.clone(),
                        position,
                        object: premise.object.clone(),
                        value: premise.value.clone(),
                    });
                }
            }
            concluded.insert(rule.conclusion.severity());
        }

        for severity in concluded {
            if severity.needs_mitigation() && !self.mitigations.contains_key(&severity) {
                issues.push(ValidationIssue::MissingMitigation { severity });
            }
        }
        if self.mitigations.contains_key(&Severity::NoEvidence) {
            issues.push(ValidationIssue::UnexpectedMitigation {
                severity: Severity::NoEvidence,
            });
        }

        ValidationReport { issues }
    }

    fn checked(self) -> Result<KnowledgeBase, KbError> {
        let report = self.validate();
        if report.is_empty() {
            Ok(self)
        } else {
            Err(KbError::Invalid(report))
        }
    }

    /// Inserts `rule`, replacing any rule with the same id in place.
    pub fn upsert_rule(&self, rule: Rule) -> Result<KnowledgeBase, KbError> {
        let mut next = self.clone();
        match next.rules.iter_mut().find(|r| r.id == rule.id) {
            Some(slot) => *slot = rule,
            None => next.rules.push(rule),
        }
        next.checked()
    }

    pub fn delete_rule(&self, id: &RuleId) -> Result<KnowledgeBase, KbError> {
        let pos = self
            .rules
            .iter()
            .position(|r| &r.id == id)
            .ok_or_else(|| KbError::UnknownRule(id.clone()))?;
        let mut next = self.clone();
        next.rules.remove(pos);
        next.checked()
    }

    pub fn upsert_indicator(&self, indicator: Indicator) -> Result<KnowledgeBase, KbError> {
        let mut next = self.clone();
        next.catalog.insert(indicator.name.clone(), indicator);
        next.checked()
    }

    pub fn delete_indicator(&self, name: &str) -> Result<KnowledgeBase, KbError> {
        let name = normalize(name);
        if !self.catalog.contains_key(&name) {
            return Err(KbError::UnknownIndicator(name));
        }
        let users: Vec<RuleId> = self
            .rules_sorted()
            .into_iter()
            .filter(|r| r.premises.iter().any(|p| p.object == name))
            .map(|r| r.id.clone())
            .collect();
        if !users.is_empty() {
            return Err(KbError::IndicatorInUse {
                indicator: name,
                rules: users,
            });
        }
        let mut next = self.clone();
        next.catalog.remove(&name);
        next.checked()
    }

    pub fn set_mitigation(
        &self,
        severity: Severity,
        text: impl Into<String>,
    ) -> Result<KnowledgeBase, KbError> {
        let mut next = self.clone();
        next.mitigations.insert(severity, text.into());
        next.checked()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::seed_kb;
    use proptest::prelude::*;

    fn cf(v: f64) -> CertaintyFactor {
        CertaintyFactor::new(v).unwrap()
    }

    fn no_evidence() -> Hypothesis {
        Hypothesis::new("No evidence of drought", None).unwrap()
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize("  Soil   Moisture "), "soil_moisture");
        assert_eq!(normalize("Wiki-Jolo"), "wiki-jolo");
        assert_eq!(normalize(""), "");
    }

    proptest! {
        #[test]
        fn normalize_idempotent(s in "\\PC{0,40}") {
            let once = normalize(&s);
            prop_assert_eq!(normalize(&once), once);
        }

        #[test]
        fn rule_id_order_is_total(a in "[A-Z]{1,2}[0-9]{1,3}", b in "[A-Z]{1,2}[0-9]{1,3}") {
            let (x, y) = (RuleId::new(a.clone()), RuleId::new(b.clone()));
            prop_assert_eq!(x.cmp(&y) == Ordering::Equal, a == b);
            prop_assert_eq!(x.cmp(&y), y.cmp(&x).reverse());
        }
    }

    #[test]
    fn natural_rule_order() {
        let mut ids: Vec<RuleId> = ["RC10", "RC2", "R25", "RC38", "RC5"]
            .into_iter()
            .map(RuleId::from)
            .collect();
        ids.sort();
        let got: Vec<&str> = ids.iter().map(RuleId::as_str).collect();
        assert_eq!(got, ["R25", "RC2", "RC5", "RC10", "RC38"]);
        assert!(RuleId::from("RC02") != RuleId::from("RC2"));
        assert_ne!(RuleId::from("RC02").cmp(&RuleId::from("RC2")), Ordering::Equal);
    }

    #[test]
    fn hypothesis_families() {
        let h = Hypothesis::new("no  evidence of drought", Some(Season::Spring)).unwrap();
        assert_eq!(h.statement(), "No evidence of drought");
        assert_eq!(h.severity(), Severity::NoEvidence);
        assert_eq!(h.to_string(), "No evidence of drought, onset of spring");
        let m = Hypothesis::new("moderate evidence of drought", Some(Season::Autumn)).unwrap();
        assert_eq!(m.severity(), Severity::Moderate);
        let e = Hypothesis::new("evidence of drought", None).unwrap();
        assert_eq!(e.severity(), Severity::Evidence);
        assert_eq!(e.statement(), "Evidence of drought");
        assert!(matches!(
            Hypothesis::new("rain tomorrow", None),
            Err(KbError::UnknownConclusion(_))
        ));
        // Case variants are the same hypothesis.
        assert_eq!(
            Hypothesis::new("No evidence of drought", None).unwrap(),
            Hypothesis::new("no evidence of drought", None).unwrap()
        );
    }

    #[test]
    fn seed_validates_clean() {
        let kb = seed_kb();
        assert!(kb.validate().is_empty(), "{:?}", kb.validate());
        assert_eq!(kb.catalog_size(), 32);
    }

    #[test]
    fn catalog_size_counts() {
        assert_eq!(KnowledgeBase::new().catalog_size(), 0);
        let kb = seed_kb();
        let extra = Indicator::new(
            "Baobab tree",
            IndicatorCategory::Plant,
            vec![State::new(Relation::Is, "flowering")],
        );
        let kb2 = kb.upsert_indicator(extra).unwrap();
        assert_eq!(kb2.catalog_size(), kb.catalog_size() + 1);
    }

    #[test]
    fn unknown_indicator_is_reported() {
        let mut kb = seed_kb();
        kb.rules.push(Rule::new(
            "RC99",
            vec![Condition::new("unicorn", Relation::Is, "sighted")],
            Connective::And,
            no_evidence(),
            cf(0.5),
        ));
        let report = kb.validate();
        assert_eq!(report.kinds(), vec![IssueKind::UnknownIndicator]);
        assert_eq!(report.issues[0].rule(), Some(&RuleId::from("RC99")));
        assert_eq!(report.issues[0].position(), Some(0));
    }

    #[test]
    fn duplicate_rule_id_is_reported() {
        let mut kb = seed_kb();
        let rc5 = kb.rule(&"RC5".into()).unwrap().clone();
        kb.rules.push(rc5);
        assert_eq!(kb.validate().kinds(), vec![IssueKind::DuplicateRuleId]);
    }

    #[test]
    fn single_field_mutations_map_to_one_issue_class() {
        let base = seed_kb();

        let mut kb = base.clone();
        kb.rules[0].premises[0].value = "purple".into();
        assert_eq!(kb.validate().kinds(), vec![IssueKind::IllegalState]);

        let mut kb = base.clone();
        kb.rules[0].expert_cf = cf(0.1234567);
        assert_eq!(kb.validate().kinds(), vec![IssueKind::CfTooPrecise]);

        let mut kb = base.clone();
        kb.rules[0].premises.clear();
        assert_eq!(kb.validate().kinds(), vec![IssueKind::EmptyPremises]);

        let mut kb = base.clone();
        kb.rules[0].id = RuleId::new("bad id");
        assert_eq!(kb.validate().kinds(), vec![IssueKind::MalformedRuleId]);

        let mut kb = base.clone();
        let first = kb.catalog.keys().next().unwrap().clone();
        kb.catalog.get_mut(&first).unwrap().states.clear();
        let kinds = kb.validate().kinds();
        assert!(kinds.iter().all(|k| matches!(k, IssueKind::EmptyStates | IssueKind::IllegalState)));
        assert!(kinds.contains(&IssueKind::EmptyStates));

        let mut kb = base.clone();
        kb.mitigations.remove(&Severity::Evidence);
        assert_eq!(kb.validate().kinds(), vec![IssueKind::MissingMitigation]);

        let mut kb = base.clone();
        kb.mitigations.insert(Severity::NoEvidence, "none".into());
        assert_eq!(kb.validate().kinds(), vec![IssueKind::UnexpectedMitigation]);

        let mut kb = base;
        let r = &mut kb.rules[0];
        let dup = r.premises[0].clone();
        r.premises.push(dup);
        assert_eq!(kb.validate().kinds(), vec![IssueKind::DuplicatePremise]);
    }

    #[test]
    fn upsert_and_delete_rules() {
        let kb = seed_kb();
        let rc99 = Rule::new(
            "RC99",
            vec![
                Condition::new("rainfall", Relation::Is, "high"),
                Condition::new("Soil moisture", Relation::Is, "High"),
            ],
            Connective::And,
            no_evidence(),
            cf(0.55),
        );
        let with = kb.upsert_rule(rc99).unwrap();
        assert!(with.rule(&"RC99".into()).is_some());
        assert_eq!(with.rules.len(), kb.rules.len() + 1);
        let back = with.delete_rule(&"RC99".into()).unwrap();
        assert_eq!(back, kb);

        assert_eq!(
            kb.delete_rule(&"RC404".into()),
            Err(KbError::UnknownRule("RC404".into()))
        );

        let bad = Rule::new(
            "RC98",
            vec![Condition::new("unicorn", Relation::Is, "sighted")],
            Connective::And,
            no_evidence(),
            cf(0.5),
        );
        assert!(matches!(kb.upsert_rule(bad), Err(KbError::Invalid(_))));
    }

    #[test]
    fn upsert_replaces_in_place() {
        let kb = seed_kb();
        let mut rc5 = kb.rule(&"RC5".into()).unwrap().clone();
        rc5.expert_cf = cf(0.55);
        let next = kb.upsert_rule(rc5).unwrap();
        assert_eq!(next.rules.len(), kb.rules.len());
        assert_eq!(next.rule(&"RC5".into()).unwrap().expert_cf, cf(0.55));
    }

    #[test]
    fn out_of_range_rule_cf_is_rejected_at_construction() {
        assert!(matches!(CertaintyFactor::new(1.3), Err(CfError::OutOfRange(_))));
    }

    #[test]
    fn deleting_referenced_indicator_fails() {
        let kb = seed_kb();
        match kb.delete_indicator("soil_moisture") {
            Err(KbError::IndicatorInUse { indicator, rules }) => {
                assert_eq!(indicator, "soil_moisture");
                assert!(rules.contains(&"RC5".into()));
            }
            other => panic!("expected IndicatorInUse, got {other:?}"),
        }
        let pruned = kb.delete_indicator("windstorm").unwrap();
        assert_eq!(pruned.catalog_size(), 31);
        assert!(matches!(
            kb.delete_indicator("unicorn"),
            Err(KbError::UnknownIndicator(_))
        ));
    }

    #[test]
    fn rule_storage_order_does_not_affect_equality() {
        let kb = seed_kb();
        let mut shuffled = kb.clone();
        shuffled.rules.reverse();
        assert_eq!(kb, shuffled);
    }

    #[test]
    fn display_names() {
        let kb = seed_kb();
        assert_eq!(kb.indicator("umphenjane").unwrap().display_name(), "Umphenejane tree");
        assert_eq!(kb.indicator("soil_moisture").unwrap().display_name(), "Soil moisture");
    }
}
