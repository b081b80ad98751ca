//! Forward-chaining evaluation of a knowledge base against working memory.
//!
//! Rules only match observable indicators and their conclusions are
//! hypotheses rather than new facts, so a single pass over the rules in
//! ascending id order reaches the fixpoint. Each applicable rule contributes
//! `expert_cf * premise_cf`; contributions to the same hypothesis are folded
//! with [`combine`](crate::cf::combine) in that same id order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cf::{aggregate_and, aggregate_or, combine, fire, CertaintyFactor};
use crate::kb::{Condition, ConditionError, Connective, FactKey, Hypothesis, KnowledgeBase, Rule, RuleId};

/// Rule counts at or above this are evaluated on the rayon pool.
#[cfg(feature = "parallel")]
pub const PARALLEL_RULE_THRESHOLD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservationSource {
    User,
    /// Supplied without a CF and assumed fully certain.
    Default,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub condition: Condition,
    pub cf: CertaintyFactor,
    pub source: ObservationSource,
}

impl Observation {
    pub fn new(condition: Condition, cf: CertaintyFactor) -> Self {
        Observation {
            condition,
            cf,
            source: ObservationSource::User,
        }
    }

    /// An observation entered without a confidence value; CF 1.0.
    pub fn assumed(condition: Condition) -> Self {
        Observation {
            condition,
            cf: CertaintyFactor::ONE,
            source: ObservationSource::Default,
        }
    }

    pub fn with_optional_cf(condition: Condition, cf: Option<CertaintyFactor>) -> Self {
        match cf {
            Some(cf) => Observation::new(condition, cf),
            None => Observation::assumed(condition),
        }
    }

    pub fn key(&self) -> FactKey {
        self.condition.key()
    }
}

/// The session's facts, at most one per `(object, value)` key.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(from = "Vec<Observation>", into = "Vec<Observation>")]
pub struct WorkingMemory {
    observations: BTreeMap<FactKey, Observation>,
}

impl From<Vec<Observation>> for WorkingMemory {
    fn from(list: Vec<Observation>) -> Self {
        list.into_iter().collect()
    }
}

impl From<WorkingMemory> for Vec<Observation> {
    fn from(wm: WorkingMemory) -> Self {
        wm.observations.into_values().collect()
    }
}

impl FromIterator<Observation> for WorkingMemory {
    fn from_iter<I: IntoIterator<Item = Observation>>(iter: I) -> Self {
        let mut wm = WorkingMemory::new();
        for obs in iter {
            wm.insert(obs);
        }
        wm
    }
}

impl WorkingMemory {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or overwrites; returns the replaced observation.
    pub fn insert(&mut self, obs: Observation) -> Option<Observation> {
        self.observations.insert(obs.key(), obs)
    }

    pub fn remove(&mut self, key: &FactKey) -> Option<Observation> {
        self.observations.remove(key)
    }

    pub fn get(&self, key: &FactKey) -> Option<&Observation> {
        self.observations.get(key)
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Observation> {
        self.observations.values()
    }

    /// Objects observed in more than one state, with those states.
    pub fn contradictions(&self) -> Vec<(String, Vec<String>)> {
        let mut by_object: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for key in self.observations.keys() {
            by_object
                .entry(&key.object)
                .or_default()
                .push(key.value.clone());
        }
        by_object
            .into_iter()
            .filter(|(_, values)| values.len() > 1)
            .map(|(object, values)| (object.to_string(), values))
            .collect()
    }

    /// Checks every observation against the catalog.
    pub fn check_against(&self, kb: &KnowledgeBase) -> Result<(), InferenceError> {
        for obs in self.observations.values() {
            kb.check_condition(&obs.condition)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedObservation {
    pub object: String,
    pub value: String,
    pub cf: CertaintyFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleFiring {
    pub rule_id: RuleId,
    pub conclusion: Hypothesis,
    pub expert_cf: CertaintyFactor,
    pub premise_cf: CertaintyFactor,
    pub contribution_cf: CertaintyFactor,
    pub matched: Vec<MatchedObservation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedRule {
    pub rule_id: RuleId,
    pub missing: Vec<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "warning", rename_all = "snake_case")]
pub enum Warning {
    ContradictoryObservations { object: String, values: Vec<String> },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    #[serde(with = "score_list")]
    pub scores: BTreeMap<Hypothesis, CertaintyFactor>,
    pub firings: Vec<RuleFiring>,
    pub skipped: Vec<SkippedRule>,
    pub warnings: Vec<Warning>,
}

impl InferenceResult {
    pub fn score(&self, hypothesis: &Hypothesis) -> Option<CertaintyFactor> {
        self.scores.get(hypothesis).copied()
    }

    /// Looks a hypothesis up by its display text, ignoring case.
    pub fn score_by_text(&self, text: &str) -> Option<CertaintyFactor> {
        self.scores
            .iter()
            .find(|(h, _)| h.to_string().eq_ignore_ascii_case(text))
            .map(|(_, cf)| *cf)
    }

    pub fn fired(&self, id: &RuleId) -> bool {
        self.firings.iter().any(|f| &f.rule_id == id)
    }
}

/// JSON maps need string keys, so scores travel as a list of pairs.
mod score_list {
    use super::*;
    use serde::{Deserializer, Serializer};

    #[derive(Serialize, Deserialize)]
    struct Entry {
        hypothesis: Hypothesis,
        score: CertaintyFactor,
    }

    pub fn serialize<S: Serializer>(
        scores: &BTreeMap<Hypothesis, CertaintyFactor>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        s.collect_seq(scores.iter().map(|(h, cf)| Entry {
            hypothesis: h.clone(),
            score: *cf,
        }))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<BTreeMap<Hypothesis, CertaintyFactor>, D::Error> {
        let entries = Vec::<Entry>::deserialize(d)?;
        Ok(entries.into_iter().map(|e| (e.hypothesis, e.score)).collect())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InferenceError {
    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),
    #[error("`{value}` is not a legal state of `{object}`")]
    IllegalState { object: String, value: String },
    #[error("no hypothesis `{0}` in the result")]
    UnknownHypothesis(String),
}

impl From<ConditionError> for InferenceError {
    fn from(e: ConditionError) -> Self {
        match e {
            ConditionError::UnknownIndicator(o) => InferenceError::UnknownIndicator(o),
            ConditionError::IllegalState { object, value } => {
                InferenceError::IllegalState { object, value }
            }
        }
    }
}

/// Premise CF of `rule` under `wm`, or `None` when the rule does not apply.
///
/// AND rules need every premise observed and take the minimum; OR rules need
/// at least one and take the maximum over the observed ones.
pub fn premise_cf(rule: &Rule, wm: &WorkingMemory) -> Option<CertaintyFactor> {
    let observed = rule.premises.iter().map(|p| wm.get(&p.key()).map(|o| o.cf));
    match rule.connective {
        Connective::And => aggregate_and(observed.collect::<Option<Vec<_>>>()?).ok(),
        Connective::Or => aggregate_or(observed.flatten()).ok(),
    }
}

enum Outcome {
    Fired(RuleFiring),
    Skipped(SkippedRule),
}

fn evaluate(rule: &Rule, wm: &WorkingMemory) -> Outcome {
    match premise_cf(rule, wm) {
        Some(premise) => {
            let matched = rule
                .premises
                .iter()
                .filter_map(|p| wm.get(&p.key()))
                .map(|o| MatchedObservation {
                    object: o.condition.object.clone(),
                    value: o.condition.value.clone(),
                    cf: o.cf,
                })
                .collect();
            Outcome::Fired(RuleFiring {
                rule_id: rule.id.clone(),
                conclusion: rule.conclusion.clone(),
                expert_cf: rule.expert_cf,
                premise_cf: premise,
                contribution_cf: fire(rule.expert_cf, premise),
                matched,
            })
        }
        None => Outcome::Skipped(SkippedRule {
            rule_id: rule.id.clone(),
            missing: rule
                .premises
                .iter()
                .filter(|p| wm.get(&p.key()).is_none())
                .cloned()
                .collect(),
        }),
    }
}

fn evaluate_all(rules: &[&Rule], wm: &WorkingMemory) -> Vec<Outcome> {
    #[cfg(feature = "parallel")]
    if rules.len() >= PARALLEL_RULE_THRESHOLD {
        use rayon::prelude::*;
        // Indexed collect keeps the canonical order.
        return rules.par_iter().map(|r| evaluate(r, wm)).collect();
    }
    rules.iter().map(|r| evaluate(r, wm)).collect()
}

/// Runs every rule of `kb` against `wm`.
pub fn run(kb: &KnowledgeBase, wm: &WorkingMemory) -> Result<InferenceResult, InferenceError> {
    wm.check_against(kb)?;

    let rules = kb.rules_sorted();
    let mut result = InferenceResult::default();
    for outcome in evaluate_all(&rules, wm) {
        match outcome {
            Outcome::Fired(firing) => {
                let score = result
                    .scores
                    .entry(firing.conclusion.clone())
                    .or_insert(CertaintyFactor::ZERO);
                *score = combine(*score, firing.contribution_cf);
                result.firings.push(firing);
            }
            Outcome::Skipped(skip) => result.skipped.push(skip),
        }
    }
    result.warnings = wm
        .contradictions()
        .into_iter()
        .map(|(object, values)| Warning::ContradictoryObservations { object, values })
        .collect();
    Ok(result)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplainStep {
    pub rule_id: RuleId,
    pub matched: Vec<MatchedObservation>,
    pub premise_cf: CertaintyFactor,
    pub expert_cf: CertaintyFactor,
    pub contribution_cf: CertaintyFactor,
    /// Combined CF after folding this step in.
    pub running_cf: CertaintyFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub hypothesis: Hypothesis,
    pub steps: Vec<ExplainStep>,
    pub score: CertaintyFactor,
}

/// Replays how the score of `hypothesis` was accumulated.
pub fn explain(
    result: &InferenceResult,
    hypothesis: &Hypothesis,
) -> Result<Explanation, InferenceError> {
    let score = result
        .score(hypothesis)
        .ok_or_else(|| InferenceError::UnknownHypothesis(hypothesis.to_string()))?;
    let mut running = CertaintyFactor::ZERO;
    let steps = result
        .firings
        .iter()
        .filter(|f| &f.conclusion == hypothesis)
        .map(|f| {
            running = combine(running, f.contribution_cf);
            ExplainStep {
                rule_id: f.rule_id.clone(),
                matched: f.matched.clone(),
                premise_cf: f.premise_cf,
                expert_cf: f.expert_cf,
                contribution_cf: f.contribution_cf,
                running_cf: running,
            }
        })
        .collect();
    Ok(Explanation {
        hypothesis: hypothesis.clone(),
        steps,
        score,
    })
}
