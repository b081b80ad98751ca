//! Request and response bodies.

use axum::http::header;
use axum::response::{IntoResponse, Response};
use dsage_core::cf::CertaintyFactor;
use dsage_core::inference::{Observation, ObservationSource};
use dsage_core::kb::{
    Condition, Connective, Hypothesis, Indicator, KnowledgeBase, KnowledgeKind, Relation, Rule,
    Season, Severity,
};
use dsage_store::{KbVersion, Session};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{ApiError, ErrorCode};

/// Serializes with indentation. Responses are small and meant to be read.
pub struct Pretty<T>(pub T);

impl<T: Serialize> IntoResponse for Pretty<T> {
    fn into_response(self) -> Response {
        match serde_json::to_string_pretty(&self.0) {
            Ok(mut body) => {
                body.push('\n');
                ([(header::CONTENT_TYPE, "application/json")], body).into_response()
            }
            Err(e) => ApiError::new(ErrorCode::StorageError, format!("serialization: {e}"))
                .into_response(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KbJson<'a> {
    pub version: &'a str,
    pub indicators: Vec<&'a Indicator>,
    pub rules: Vec<&'a Rule>,
    pub mitigations: &'a BTreeMap<Severity, String>,
}

impl<'a> KbJson<'a> {
    pub fn new(version: &'a KbVersion, kb: &'a KnowledgeBase) -> Self {
        KbJson {
            version: version.as_str(),
            indicators: kb.catalog.values().collect(),
            rules: kb.rules_sorted(),
            mitigations: &kb.mitigations,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditionBody {
    pub object: String,
    #[serde(default)]
    pub relation: Option<Relation>,
    pub value: String,
}

impl ConditionBody {
    fn condition(&self) -> Condition {
        Condition::new(&self.object, self.relation.unwrap_or(Relation::Is), &self.value)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConclusionBody {
    pub statement: String,
    #[serde(default)]
    pub season: Option<Season>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleBody {
    #[serde(default)]
    pub id: Option<String>,
    pub premises: Vec<ConditionBody>,
    #[serde(default)]
    pub connective: Option<Connective>,
    pub conclusion: ConclusionBody,
    pub expert_cf: f64,
    #[serde(default)]
    pub kind: Option<KnowledgeKind>,
}

impl RuleBody {
    pub fn into_rule(self, id: &str) -> Result<Rule, ApiError> {
        if let Some(body_id) = &self.id {
            if body_id != id {
                return Err(ApiError::invalid(format!(
                    "body id {body_id} does not match path id {id}"
                )));
            }
        }
        let conclusion = Hypothesis::new(&self.conclusion.statement, self.conclusion.season)?;
        let cf = CertaintyFactor::new(self.expert_cf)
            .map_err(|e| ApiError::new(ErrorCode::InvalidRule, e.to_string()))?;
        let mut rule = Rule::new(
            id,
            self.premises.iter().map(ConditionBody::condition).collect(),
            self.connective.unwrap_or(Connective::And),
            conclusion,
            cf,
        );
        rule.kind = self.kind.unwrap_or_default();
        Ok(rule)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationBody {
    pub object: String,
    #[serde(default)]
    pub relation: Option<Relation>,
    pub value: String,
    /// Defaults to 1.0 (the fact is assumed).
    #[serde(default)]
    pub cf: Option<f64>,
}

impl ObservationBody {
    pub fn observation(&self) -> Result<Observation, ApiError> {
        let condition =
            Condition::new(&self.object, self.relation.unwrap_or(Relation::Is), &self.value);
        let cf = self
            .cf
            .map(CertaintyFactor::new)
            .transpose()
            .map_err(|e| ApiError::invalid(format!("{condition}: {e}")))?;
        Ok(Observation::with_optional_cf(condition, cf))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservationsBody {
    pub observations: Vec<ObservationBody>,
}

#[derive(Debug, Serialize)]
pub struct ObservationJson {
    pub object: String,
    pub relation: Relation,
    pub value: String,
    pub cf: f64,
    pub source: ObservationSource,
}

impl From<&Observation> for ObservationJson {
    fn from(o: &Observation) -> Self {
        ObservationJson {
            object: o.condition.object.clone(),
            relation: o.condition.relation,
            value: o.condition.value.clone(),
            cf: o.cf.value(),
            source: o.source,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SessionJson {
    pub id: String,
    pub created_at: String,
    pub kb_version: String,
    pub observations: Vec<ObservationJson>,
    pub has_result: bool,
}

impl From<&Session> for SessionJson {
    fn from(s: &Session) -> Self {
        SessionJson {
            id: s.id.to_string(),
            created_at: s.created_at_rfc3339(),
            kb_version: s.kb_version.to_string(),
            observations: s.wm.iter().map(ObservationJson::from).collect(),
            has_result: s.last_result.is_some(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RebaseJson {
    pub kb_rebased: bool,
    pub from: String,
    pub to: String,
    pub dropped: Vec<ObservationJson>,
    pub session: SessionJson,
}
