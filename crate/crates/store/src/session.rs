//! Consultation sessions and their on-disk record format.
//!
//! A session file is UTF-8, one `key = value` pair per line:
//!
//! ```text
//! format = 1
//! id = 5f0c...
//! created_at = 2026-10-16T08:30:00.000000000Z
//! kb_version = 3a7b...
//! observation = soil_moisture is high 0.5 user
//! last_result = {"scores":[...],...}
//! ```
//!
//! `observation` repeats once per fact; `last_result` is optional.

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use dsage_core::cf::CertaintyFactor;
use dsage_core::inference::{InferenceResult, Observation, ObservationSource, WorkingMemory};
use dsage_core::kb::{Condition, Relation};

use crate::{KbVersion, StoreError};

pub const SESSION_FORMAT: u32 = 1;

/// 128-bit random token rendered as 32 lowercase hex digits.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SessionId(String);

impl SessionId {
    pub fn random() -> Self {
        SessionId(format!("{:032x}", rand::random::<u128>()))
    }

    pub fn parse(s: &str) -> Option<Self> {
        (s.len() == 32 && s.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f')))
            .then(|| SessionId(s.to_string()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SessionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub id: SessionId,
    pub created_at: DateTime<Utc>,
    pub kb_version: KbVersion,
    pub wm: WorkingMemory,
    /// Cleared whenever `wm` or `kb_version` changes.
    pub last_result: Option<InferenceResult>,
}

impl Session {
    pub fn new(kb_version: KbVersion) -> Self {
        Session {
            id: SessionId::random(),
            created_at: Utc::now(),
            kb_version,
            wm: WorkingMemory::new(),
            last_result: None,
        }
    }

    /// Creation time as RFC 3339 UTC with nanoseconds.
    pub fn created_at_rfc3339(&self) -> String {
        self.created_at.to_rfc3339_opts(SecondsFormat::Nanos, true)
    }

    pub fn to_record(&self) -> String {
        let mut out = format!(
            "format = {SESSION_FORMAT}\nid = {}\ncreated_at = {}\nkb_version = {}\n",
            self.id,
            self.created_at_rfc3339(),
            self.kb_version
        );
        for obs in self.wm.iter() {
            let c = &obs.condition;
            let source = match obs.source {
                ObservationSource::User => "user",
                ObservationSource::Default => "default",
            };
            out.push_str(&format!(
                "observation = {} {} {} {} {source}\n",
                c.object, c.relation, c.value, obs.cf
            ));
        }
        if let Some(result) = &self.last_result {
            // serde_json output never contains a raw newline.
            let json = serde_json::to_string(result).expect("inference results serialize");
            out.push_str(&format!("last_result = {json}\n"));
        }
        out
    }

    pub fn from_record(text: &str) -> Result<Session, String> {
        let mut format = None;
        let mut id = None;
        let mut created_at = None;
        let mut kb_version = None;
        let mut wm = WorkingMemory::new();
        let mut last_result = None;

        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(" = ")
                .ok_or_else(|| format!("line {}: expected `key = value`", n + 1))?;
            let bad = |what: &str| format!("line {}: invalid {what}", n + 1);
            match key {
                "format" => {
                    let v: u32 = value.parse().map_err(|_| bad("format"))?;
                    if v != SESSION_FORMAT {
                        return Err(format!("unsupported session format {v}"));
                    }
                    format = Some(v);
                }
                "id" => id = Some(SessionId::parse(value).ok_or_else(|| bad("id"))?),
                "created_at" => {
                    let t = DateTime::parse_from_rfc3339(value).map_err(|_| bad("created_at"))?;
                    created_at = Some(t.with_timezone(&Utc));
                }
                "kb_version" => {
                    kb_version = Some(KbVersion::parse(value).ok_or_else(|| bad("kb_version"))?)
                }
                "observation" => {
                    let parts: Vec<&str> = value.split(' ').collect();
                    let [object, verb, val, cf, source] = parts.as_slice() else {
                        return Err(bad("observation"));
                    };
                    let relation: Relation = verb.parse().map_err(|_| bad("observation verb"))?;
                    let cf = cf
                        .parse::<f64>()
                        .ok()
                        .and_then(|v| CertaintyFactor::new(v).ok())
                        .ok_or_else(|| bad("observation cf"))?;
                    let source = match *source {
                        "user" => ObservationSource::User,
                        "default" => ObservationSource::Default,
                        _ => return Err(bad("observation source")),
                    };
                    wm.insert(Observation {
                        condition: Condition::new(object, relation, val),
                        cf,
                        source,
                    });
                }
                "last_result" => {
                    last_result =
                        Some(serde_json::from_str(value).map_err(|e| format!("line {}: {e}", n + 1))?)
                }
                other => return Err(format!("line {}: unknown key `{other}`", n + 1)),
            }
        }

        format.ok_or("missing `format`")?;
        Ok(Session {
            id: id.ok_or("missing `id`")?,
            created_at: created_at.ok_or("missing `created_at`")?,
            kb_version: kb_version.ok_or("missing `kb_version`")?,
            wm,
            last_result,
        })
    }
}

impl From<String> for StoreError {
    fn from(message: String) -> Self {
        StoreError::CorruptSession(message)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use dsage_core::inference::run;
    use dsage_core::seed::seed_kb;

    fn sample() -> Session {
        let kb = seed_kb();
        let mut s = Session::new(crate::digest(&kb));
        s.wm.insert(Observation::new(
            Condition::new("soil_moisture", Relation::Is, "high"),
            CertaintyFactor::new(0.1 + 0.2).unwrap(),
        ));
        s.wm.insert(Observation::assumed(Condition::new("stars", Relation::Are, "sighted")));
        s.last_result = Some(run(&kb, &s.wm).unwrap());
        s
    }

    #[test]
    fn record_round_trip() {
        let s = sample();
        let text = s.to_record();
        assert!(text.contains("observation = stars are sighted 1 default\n"));
        assert_eq!(Session::from_record(&text).unwrap(), s);
    }

    #[test]
    fn ids() {
        let a = SessionId::random();
        assert_eq!(a.as_str().len(), 32);
        assert_ne!(a, SessionId::random());
        assert!(SessionId::parse(a.as_str()).is_some());
        assert!(SessionId::parse("../../etc/passwd").is_none());
        assert!(SessionId::parse(&"A".repeat(32)).is_none());
    }

    #[test]
    fn corrupt_records_are_rejected() {
        let good = sample().to_record();
        assert!(Session::from_record(&good.replace("format = 1", "format = 9")).is_err());
        assert!(Session::from_record(&good.replace(" default", " maybe")).is_err());
        assert!(Session::from_record("format = 1\n").is_err());
        assert!(Session::from_record("garbage").is_err());
    }
}
