//! Machine-readable consultation output shared by the CLI (`--json`) and
//! the HTTP service. CF values are rendered with exactly six decimals.

use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::advisory::{advise, Advisory};
use crate::cf::CertaintyFactor;
use crate::inference::{explain, InferenceResult, Warning};
use crate::kb::{KnowledgeBase, Season, Severity};

pub const REPORT_SCHEMA: &str = "dsage.consultation/1";

/// A number that serializes as a JSON literal with six fraction digits.
/// Only meaningful with `serde_json`.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(transparent)]
pub struct Fixed6(pub f64);

impl Fixed6 {
    pub fn render(self) -> String {
        format!("{:.6}", self.0)
    }
}

impl From<CertaintyFactor> for Fixed6 {
    fn from(cf: CertaintyFactor) -> Self {
        Fixed6(cf.value())
    }
}

impl Serialize for Fixed6 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let raw = RawValue::from_string(self.render()).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedJson {
    pub object: String,
    pub value: String,
    pub cf: Fixed6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStepJson {
    pub rule_id: String,
    pub matched: Vec<MatchedJson>,
    pub premise_cf: Fixed6,
    pub expert_cf: Fixed6,
    pub contribution_cf: Fixed6,
    pub running_cf: Fixed6,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryJson {
    pub rank: usize,
    pub statement: String,
    pub season: Option<Season>,
    pub display: String,
    pub severity: Severity,
    pub cf: Fixed6,
    pub cf_percent: u8,
    pub mitigation: Option<String>,
    pub trace: Vec<TraceStepJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedJson {
    pub rule_id: String,
    pub missing: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsultationReport {
    pub schema: String,
    pub kb_version: Option<String>,
    pub advisories: Vec<AdvisoryJson>,
    pub skipped: Vec<SkippedJson>,
    pub warnings: Vec<Warning>,
}

fn advisory_json(a: &Advisory, result: &InferenceResult) -> AdvisoryJson {
    let trace = explain(result, &a.hypothesis)
        .map(|e| {
            e.steps
                .into_iter()
                .map(|s| TraceStepJson {
                    rule_id: s.rule_id.to_string(),
                    matched: s
                        .matched
                        .into_iter()
                        .map(|m| MatchedJson {
                            object: m.object,
                            value: m.value,
                            cf: m.cf.into(),
                        })
                        .collect(),
                    premise_cf: s.premise_cf.into(),
                    expert_cf: s.expert_cf.into(),
                    contribution_cf: s.contribution_cf.into(),
                    running_cf: s.running_cf.into(),
                })
                .collect()
        })
        .unwrap_or_default();
    AdvisoryJson {
        rank: a.rank,
        statement: a.hypothesis.statement().to_string(),
        season: a.hypothesis.season(),
        display: a.hypothesis.to_string(),
        severity: a.hypothesis.severity(),
        cf: a.score.into(),
        cf_percent: a.cf_percent,
        mitigation: a.mitigation.clone(),
        trace,
    }
}

pub fn consultation_report(
    kb: &KnowledgeBase,
    result: &InferenceResult,
    kb_version: Option<&str>,
) -> ConsultationReport {
    ConsultationReport {
        schema: REPORT_SCHEMA.to_string(),
        kb_version: kb_version.map(str::to_string),
        advisories: advise(kb, result)
            .iter()
            .map(|a| advisory_json(a, result))
            .collect(),
        skipped: result
            .skipped
            .iter()
            .map(|s| SkippedJson {
                rule_id: s.rule_id.to_string(),
                missing: s.missing.iter().map(|c| c.to_string()).collect(),
            })
            .collect(),
        warnings: result.warnings.clone(),
    }
}
