use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

/// Result of a comparison or reduction.
///
/// `Unbounded` is the flagged sentinel produced by division by zero (a ratio
/// `x/0` with `x > 0`) or by coincident inputs in individual bias. It orders
/// like the matching infinity under `max`/`min` and is skipped by means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Outcome {
    Finite(f64),
    Unbounded(Sign),
    Na(String),
}

impl Outcome {
    pub fn na(reason: impl Into<String>) -> Self {
        Outcome::Na(reason.into())
    }

    pub fn finite(&self) -> Option<f64> {
        match self {
            Outcome::Finite(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_na(&self) -> bool {
        matches!(self, Outcome::Na(_))
    }

    pub fn is_unbounded(&self) -> bool {
        matches!(self, Outcome::Unbounded(_))
    }

    pub fn na_reason(&self) -> Option<&str> {
        match self {
            Outcome::Na(reason) => Some(reason),
            _ => None,
        }
    }

    /// Extended-real view: sentinels map to ±∞, NA to `None`.
    pub fn as_extended(&self) -> Option<f64> {
        match self {
            Outcome::Finite(v) => Some(*v),
            Outcome::Unbounded(Sign::Positive) => Some(f64::INFINITY),
            Outcome::Unbounded(Sign::Negative) => Some(f64::NEG_INFINITY),
            Outcome::Na(_) => None,
        }
    }

    /// Inverse of [`Outcome::as_extended`] for non-NaN inputs.
    pub fn from_extended(v: f64) -> Self {
        if v == f64::INFINITY {
            Outcome::Unbounded(Sign::Positive)
        } else if v == f64::NEG_INFINITY {
            Outcome::Unbounded(Sign::Negative)
        } else if v.is_nan() {
            Outcome::na("undefined arithmetic")
        } else {
            Outcome::Finite(v)
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Outcome::Finite(v) => write!(f, "{v:.6}"),
            Outcome::Unbounded(Sign::Positive) => f.write_str("+unbounded"),
            Outcome::Unbounded(Sign::Negative) => f.write_str("-unbounded"),
            Outcome::Na(_) => f.write_str("NA"),
        }
    }
}
