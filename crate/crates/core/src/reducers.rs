//! Reduction `⊙` of all pairwise comparison values into one number.
//!
//! Self-pairs are dropped first, NA values are skipped and counted, and the
//! unbounded sentinel orders like ±∞ under `max`/`min` while means skip it.
//! Sums run over sorted terms so results do not depend on item order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::outcome::Outcome;
use crate::selectors::GroupPair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    Max,
    Min,
    Mean,
    /// Weighted mean with weights `1 - |P(S_i) - P(S_j)|`, normalized by
    /// the total weight.
    Wmean,
    /// The same weighted sum without normalization.
    WmeanRaw,
}

impl Reduction {
    pub fn name(self) -> &'static str {
        match self {
            Reduction::Max => "max",
            Reduction::Min => "min",
            Reduction::Mean => "mean",
            Reduction::Wmean => "wmean",
            Reduction::WmeanRaw => "wmean_raw",
        }
    }

    fn is_weighted(self) -> bool {
        matches!(self, Reduction::Wmean | Reduction::WmeanRaw)
    }
}

impl fmt::Display for Reduction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Reduction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "max" => Reduction::Max,
            "min" => Reduction::Min,
            "mean" => Reduction::Mean,
            "wmean" => Reduction::Wmean,
            "wmean_raw" => Reduction::WmeanRaw,
            _ => return Err(Error::Parameter(format!("unknown reduction `{s}`"))),
        })
    }
}

/// What a reduction needs to know about one compared pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionItem {
    pub value: Outcome,
    /// `P(x ∈ S_i)` and `P(x ∈ S_j)`.
    pub left_share: f64,
    pub right_share: f64,
    pub self_pair: bool,
}

impl ReductionItem {
    pub fn from_pair(pair: &GroupPair, value: Outcome) -> Self {
        Self {
            value,
            left_share: pair.left.mask.share(),
            right_share: pair.right.mask.share(),
            self_pair: pair.is_self(),
        }
    }

    pub fn weight(&self) -> f64 {
        1.0 - (self.left_share - self.right_share).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelfPairs {
    Skip,
    Keep,
}

/// Role each item played in the reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemStatus {
    Used,
    SkippedSelf,
    SkippedNa,
    SkippedUnbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reduced {
    pub value: Outcome,
    pub status: Vec<ItemStatus>,
    /// Index of the item that decided a `max`/`min`.
    pub winner: Option<usize>,
    /// Sum of weights over used items, for weighted means.
    pub total_weight: Option<f64>,
    pub warnings: Vec<String>,
}

impl Reduced {
    pub fn count(&self, status: ItemStatus) -> usize {
        self.status.iter().filter(|&&s| s == status).count()
    }
}

/// Reduce `(pair, value)` items, skipping self-pairs.
pub fn reduce(kind: Reduction, items: &[(GroupPair, Outcome)]) -> Reduced {
    let items: Vec<ReductionItem> = items
        .iter()
        .map(|(pair, value)| ReductionItem::from_pair(pair, value.clone()))
        .collect();
    reduce_items(kind, &items, SelfPairs::Skip)
}

pub fn reduce_items(kind: Reduction, items: &[ReductionItem], self_pairs: SelfPairs) -> Reduced {
    let mut status = Vec::with_capacity(items.len());
    let mut warnings = Vec::new();
    let means = matches!(
        kind,
        Reduction::Mean | Reduction::Wmean | Reduction::WmeanRaw
    );

    // (index, extended value)
    let mut kept: Vec<(usize, f64)> = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let st = if self_pairs == SelfPairs::Skip && item.self_pair {
            ItemStatus::SkippedSelf
        } else {
            match item.value.as_extended() {
                None => ItemStatus::SkippedNa,
                Some(v) if means && v.is_infinite() => ItemStatus::SkippedUnbounded,
                Some(v) => {
                    kept.push((i, v));
                    ItemStatus::Used
                }
            }
        };
        status.push(st);
    }
    let unbounded = status
        .iter()
        .filter(|&&s| s == ItemStatus::SkippedUnbounded)
        .count();
    if unbounded > 0 {
        warnings.push(format!("{unbounded} unbounded value(s) skipped by {kind}"));
    }

    let mut out = Reduced {
        value: Outcome::na("nothing left to reduce after removing self-pairs and NA values"),
        status,
        winner: None,
        total_weight: None,
        warnings,
    };
    if kept.is_empty() {
        return out;
    }

    match kind {
        Reduction::Max | Reduction::Min => {
            let mut best = kept[0];
            for &(i, v) in &kept[1..] {
                let better = if kind == Reduction::Max {
                    v > best.1
                } else {
                    v < best.1
                };
                if better {
                    best = (i, v);
                }
            }
            out.winner = Some(best.0);
            out.value = Outcome::from_extended(best.1);
        }
        Reduction::Mean => {
            let mut values: Vec<f64> = kept.iter().map(|&(_, v)| v).collect();
            values.sort_by(f64::total_cmp);
            out.value = Outcome::Finite(values.iter().sum::<f64>() / values.len() as f64);
        }
        Reduction::Wmean | Reduction::WmeanRaw => {
            debug_assert!(kind.is_weighted());
            let mut terms: Vec<(f64, f64)> =
                kept.iter().map(|&(i, v)| (v, items[i].weight())).collect();
            terms.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
            let raw: f64 = terms.iter().map(|(v, w)| v * w).sum();
            let total: f64 = terms.iter().map(|(_, w)| w).sum();
            out.total_weight = Some(total);
            out.value = if kind == Reduction::WmeanRaw {
                Outcome::Finite(raw)
            } else if total > 0.0 {
                Outcome::Finite(raw / total)
            } else {
                Outcome::na("total weight is zero")
            };
        }
    }
    out
}
