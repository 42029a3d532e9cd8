use serde::{Deserialize, Serialize};

/// Curve metadata attached to a base measure.
///
/// `Continuous` holds piecewise-linear breakpoints with nondecreasing `x`;
/// a repeated `x` encodes a vertical jump, which roc step curves need.
/// `Discrete` holds point masses at strictly increasing positive integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "points", rename_all = "lowercase")]
pub enum Curve {
    Continuous(Vec<(f64, f64)>),
    Discrete(Vec<(u32, f64)>),
}

impl Curve {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Curve::Continuous(_) => "continuous",
            Curve::Discrete(_) => "discrete",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Curve::Continuous(p) => p.len(),
            Curve::Discrete(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Trapezoidal area for continuous curves, total mass for discrete ones.
    pub fn area(&self) -> f64 {
        match self {
            Curve::Continuous(points) => points
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
                .sum(),
            Curve::Discrete(masses) => masses.iter().map(|(_, m)| m).sum(),
        }
    }

    /// Checks the ordering invariants of the representation.
    pub fn is_well_formed(&self) -> bool {
        match self {
            Curve::Continuous(p) => {
                p.len() >= 2
                    && p.iter().all(|(x, y)| x.is_finite() && y.is_finite())
                    && p.windows(2).all(|w| w[0].0 <= w[1].0)
                    && p.first().map(|f| f.0) < p.last().map(|l| l.0)
            }
            Curve::Discrete(m) => {
                m.iter().all(|&(k, v)| k > 0 && v.is_finite())
                    && m.windows(2).all(|w| w[0].0 < w[1].0)
            }
        }
    }
}
