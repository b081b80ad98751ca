//! Rule-based drought early-warning engine.
//!
//! Observations of natural indicators (object-attribute-value facts with a
//! certainty factor) are matched against expert rules by forward chaining;
//! rule contributions are scored and combined with MYCIN-style certainty
//! factors and rendered as ranked advisories.
//!
//! * [`cf`]: certainty-factor arithmetic
//! * [`kb`]: indicator catalog, rules and validation
//! * [`dsl`]: the `.dkb` text format
//! * [`inference`]: working memory and the forward-chaining run
//! * [`advisory`] / [`report`]: ranked output and its JSON form
//! * [`batch`]: many consultations at once (rayon when `parallel` is on)

pub mod advisory;
pub mod batch;
pub mod cf;
pub mod dsl;
pub mod inference;
pub mod kb;
pub mod report;
pub mod seed;

pub use advisory::{advise, cf_percent, Advisory};
pub use cf::{CertaintyFactor, CfError};
pub use dsl::{parse_kb, serialize_kb, ParseError, SourceSpan};
pub use inference::{explain, premise_cf, run, InferenceError, InferenceResult, Observation, WorkingMemory};
pub use kb::{Condition, Hypothesis, KnowledgeBase, Rule, RuleId, ValidationReport};
pub use seed::seed_kb;
