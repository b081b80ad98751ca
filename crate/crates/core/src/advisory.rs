//! Drought forecast advisories: ranked hypotheses with a CF percentage and,
//! for moderate or stronger evidence, the stored mitigation text.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::cf::CertaintyFactor;
use crate::inference::InferenceResult;
use crate::kb::{Hypothesis, KnowledgeBase};

/// Slack for binary representation error, so that e.g. 0.945 (stored as
/// 0.94499999...) still rounds up to 95.
const HALF_UP_SLACK: f64 = 1e-9;

/// `score * 100` rounded half-up to an integer percentage.
pub fn cf_percent(score: CertaintyFactor) -> u8 {
    let pct = (score.value() * 100.0 + 0.5 + HALF_UP_SLACK).floor();
    pct.clamp(0.0, 100.0) as u8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Advisory {
    /// 1-based position in the ranking.
    pub rank: usize,
    pub hypothesis: Hypothesis,
    pub score: CertaintyFactor,
    pub cf_percent: u8,
    pub mitigation: Option<String>,
}

/// Ranking order: higher percentage first, then more severe, then
/// display text, then the exact score and the hypothesis itself so that no
/// two distinct advisories compare equal.
pub fn ranking(a: (&Hypothesis, CertaintyFactor), b: (&Hypothesis, CertaintyFactor)) -> Ordering {
    cf_percent(b.1)
        .cmp(&cf_percent(a.1))
        .then_with(|| b.0.severity().cmp(&a.0.severity()))
        .then_with(|| a.0.to_string().cmp(&b.0.to_string()))
        .then_with(|| b.1.partial_cmp(&a.1).unwrap_or(Ordering::Equal))
        .then_with(|| a.0.cmp(b.0))
}

/// Turns an inference result into the ranked advisory list.
pub fn advise(kb: &KnowledgeBase, result: &InferenceResult) -> Vec<Advisory> {
    let mut scored: Vec<(&Hypothesis, CertaintyFactor)> =
        result.scores.iter().map(|(h, cf)| (h, *cf)).collect();
    scored.sort_by(|a, b| ranking(*a, *b));
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (hypothesis, score))| Advisory {
            rank: i + 1,
            hypothesis: hypothesis.clone(),
            score,
            cf_percent: cf_percent(score),
            mitigation: if hypothesis.severity().needs_mitigation() {
                kb.mitigation(hypothesis.severity()).map(str::to_string)
            } else {
                None
            },
        })
        .collect()
}
