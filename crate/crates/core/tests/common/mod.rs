#![allow(dead_code)]

use std::collections::BTreeMap;

use dsage_core::cf::CertaintyFactor;
use dsage_core::inference::{Observation, WorkingMemory};
use dsage_core::kb::{
    Condition, Connective, Hypothesis, Indicator, IndicatorCategory, KnowledgeBase, KnowledgeKind,
    Relation, Rule, Season, Severity, State,
};
use proptest::prelude::*;

pub const STATES: [&str; 2] = ["high", "low"];

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("ind_{i}")).collect()
}

fn category() -> impl Strategy<Value = IndicatorCategory> {
    prop::sample::select(IndicatorCategory::ALL.to_vec())
}

fn relation() -> impl Strategy<Value = Relation> {
    prop::sample::select(Relation::ALL.to_vec())
}

fn hypothesis() -> impl Strategy<Value = Hypothesis> {
    (
        prop::sample::select(vec![
            "No evidence of drought",
            "Moderate evidence of drought",
            "Evidence of drought",
        ]),
        prop::option::of(prop::sample::select(Season::ALL.to_vec())),
    )
        .prop_map(|(s, season)| Hypothesis::new(s, season).unwrap())
}

/// CF with at most six decimals, so it survives the text format.
pub fn six_decimal_cf() -> impl Strategy<Value = CertaintyFactor> {
    (0u32..=1_000_000).prop_map(|k| CertaintyFactor::new(k as f64 / 1e6).unwrap())
}

fn rule(n_indicators: usize, idx: usize) -> impl Strategy<Value = Rule> {
    let keys: Vec<(usize, usize)> = (0..n_indicators)
        .flat_map(|i| (0..STATES.len()).map(move |s| (i, s)))
        .collect();
    (
        prop::sample::subsequence(keys.clone(), 1..=keys.len().min(4)).prop_shuffle(),
        prop::collection::vec(relation(), 4),
        prop::bool::ANY,
        hypothesis(),
        six_decimal_cf(),
        prop::sample::select(KnowledgeKind::ALL.to_vec()),
    )
        .prop_map(move |(picked, verbs, or, conclusion, cf, kind)| {
            let premises = picked
                .iter()
                .zip(verbs)
                .map(|(&(i, s), verb)| Condition::new(&format!("ind_{i}"), verb, STATES[s]))
                .collect();
            let mut r = Rule::new(
                format!("R{}", idx + 1),
                premises,
                if or { Connective::Or } else { Connective::And },
                conclusion,
                cf,
            );
            r.kind = kind;
            r
        })
}

/// A valid knowledge base over `1..=max_indicators` indicators with two
/// states each and `0..=max_rules` rules.
pub fn knowledge_base(max_indicators: usize, max_rules: usize) -> impl Strategy<Value = KnowledgeBase> {
    (1..=max_indicators, 0..=max_rules).prop_flat_map(|(n_ind, n_rules)| {
        let rules: Vec<_> = (0..n_rules).map(|i| rule(n_ind, i)).collect();
        (
            prop::collection::vec((category(), prop::option::of("[ -~]{0,12}")), n_ind),
            rules,
            prop::collection::vec(relation(), 2),
        )
            .prop_map(move |(cats, rules, state_verbs)| {
                let mut kb = KnowledgeBase::new();
                for (name, (cat, alias)) in names(n_ind).into_iter().zip(cats) {
                    let states = STATES
                        .iter()
                        .zip(&state_verbs)
                        .map(|(v, verb)| State::new(*verb, v))
                        .collect();
                    let mut ind = Indicator::new(&name, cat, states);
                    ind.alias = alias;
                    kb.catalog.insert(ind.name.clone(), ind);
                }
                kb.rules = rules;
                kb.mitigations = BTreeMap::from([
                    (Severity::Moderate, "moderate \"plan\"\\ok".to_string()),
                    (Severity::Evidence, "evidence plan".to_string()),
                ]);
                kb
            })
    })
}

/// Observations over the keys of `kb` (each key present with prob ~1/2).
pub fn working_memory(kb: &KnowledgeBase) -> impl Strategy<Value = WorkingMemory> {
    let keys: Vec<(String, String)> = kb
        .catalog
        .values()
        .flat_map(|i| i.states.iter().map(move |s| (i.name.clone(), s.value.clone())))
        .collect();
    let n = keys.len();
    prop::collection::vec(prop::option::of((0.0f64..=1.0).prop_map(|v| CertaintyFactor::new(v).unwrap())), n)
        .prop_map(move |cfs| {
            keys.iter()
                .zip(cfs)
                .filter_map(|((o, v), cf)| {
                    cf.map(|cf| Observation::new(Condition::new(o, Relation::Is, v), cf))
                })
                .collect()
        })
}

pub fn kb_and_wm(max_indicators: usize, max_rules: usize) -> impl Strategy<Value = (KnowledgeBase, WorkingMemory)> {
    knowledge_base(max_indicators, max_rules).prop_flat_map(|kb| {
        let wm = working_memory(&kb);
        (Just(kb), wm)
    })
}

/// Independent scoring oracle: for each hypothesis, `1 - prod(1 - r_i * p_i)`
/// over the applicable rules, computed with plain loops.
pub fn oracle_scores(kb: &KnowledgeBase, wm: &WorkingMemory) -> BTreeMap<String, f64> {
    let mut complement: BTreeMap<String, f64> = BTreeMap::new();
    for rule in &kb.rules {
        let mut present = Vec::new();
        let mut all = true;
        for p in &rule.premises {
            match wm.iter().find(|o| o.condition.object == p.object && o.condition.value == p.value) {
                Some(o) => present.push(o.cf.value()),
                None => all = false,
            }
        }
        let premise = match rule.connective {
            Connective::And if all => present.iter().cloned().fold(f64::INFINITY, f64::min),
            Connective::Or if !present.is_empty() => {
                present.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            _ => continue,
        };
        let c = rule.expert_cf.value() * premise;
        *complement.entry(rule.conclusion.to_string()).or_insert(1.0) *= 1.0 - c;
    }
    complement.into_iter().map(|(h, q)| (h, 1.0 - q)).collect()
}
