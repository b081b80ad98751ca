//! Certainty-factor arithmetic.
//!
//! Every confidence value in the engine (observation CFs, expert rule CFs and
//! accumulated hypothesis scores) is a [`CertaintyFactor`] in `[0, 1]`. The
//! four operations here are the whole uncertainty model:
//!
//! * [`aggregate_and`] / [`aggregate_or`] collapse a premise list to one CF
//!   (minimum for conjunctions, maximum for disjunctions);
//! * [`fire`] scales the premise CF by the expert's rule CF;
//! * [`combine`] accumulates parallel evidence for the same hypothesis,
//!   `old + (1 - old) * new`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfError {
    #[error("certainty factor {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("cannot aggregate an empty premise list")]
    EmptyPremises,
}

/// A confidence value in `[0.0, 1.0]`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Default, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct CertaintyFactor(f64);

impl CertaintyFactor {
    pub const ZERO: CertaintyFactor = CertaintyFactor(0.0);
    pub const ONE: CertaintyFactor = CertaintyFactor(1.0);

    /// Rejects NaN and anything outside `[0, 1]`.
    pub fn new(value: f64) -> Result<Self, CfError> {
        if (0.0..=1.0).contains(&value) {
            Ok(CertaintyFactor(value))
        } else {
            Err(CfError::OutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// True when the value prints exactly with at most six fraction digits,
    /// which is what the rule file format can carry.
    pub fn fits_six_decimals(self) -> bool {
        format!("{:.6}", self.0).parse::<f64>() == Ok(self.0)
    }

    /// Rounds to six fraction digits.
    pub fn rounded_six(self) -> Self {
        let v: f64 = format!("{:.6}", self.0).parse().expect("formatted float");
        CertaintyFactor(v.clamp(0.0, 1.0))
    }
}

impl fmt::Debug for CertaintyFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CF({})", self.0)
    }
}

impl fmt::Display for CertaintyFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<f64> for CertaintyFactor {
    type Error = CfError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        CertaintyFactor::new(value)
    }
}

impl From<CertaintyFactor> for f64 {
    fn from(cf: CertaintyFactor) -> f64 {
        cf.0
    }
}

/// Parallel-evidence combination: `old + (1 - old) * new`.
pub fn combine(old: CertaintyFactor, new: CertaintyFactor) -> CertaintyFactor {
    let p = old.0 + (1.0 - old.0) * new.0;
    // Rounding can push the sum a hair past 1 when old is close to 1.
    CertaintyFactor(p.clamp(0.0, 1.0))
}

/// Conjunctive premise CF: the minimum of the list.
pub fn aggregate_and<I>(cfs: I) -> Result<CertaintyFactor, CfError>
where
    I: IntoIterator<Item = CertaintyFactor>,
{
    cfs.into_iter()
        .reduce(|a, b| if b.0 < a.0 { b } else { a })
        .ok_or(CfError::EmptyPremises)
}

/// Disjunctive premise CF: the maximum of the list.
pub fn aggregate_or<I>(cfs: I) -> Result<CertaintyFactor, CfError>
where
    I: IntoIterator<Item = CertaintyFactor>,
{
    cfs.into_iter()
        .reduce(|a, b| if b.0 > a.0 { b } else { a })
        .ok_or(CfError::EmptyPremises)
}

/// Contribution of a fired rule: expert CF times premise CF.
pub fn fire(rule_cf: CertaintyFactor, premise_cf: CertaintyFactor) -> CertaintyFactor {
    CertaintyFactor(rule_cf.0 * premise_cf.0)
}

/// Folds [`combine`] over `cfs` starting from zero.
pub fn combine_all<I>(cfs: I) -> CertaintyFactor
where
    I: IntoIterator<Item = CertaintyFactor>,
{
    cfs.into_iter().fold(CertaintyFactor::ZERO, combine)
}
