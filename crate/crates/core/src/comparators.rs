//! Pairwise comparison `f_i ⊘ f_j` of two base-measure values.
//!
//! Ratio conventions: `0/0 = 1`; `x/0` with `x > 0` is the positive unbounded
//! sentinel. Non-signed `rel` is clamped to `[0, 1]` and the clamp is reported
//! back to the caller so traces can record it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::measures::MeasureValue;
use crate::outcome::{Outcome, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NumericKind {
    /// `f_i` itself.
    None,
    Abs,
    Rel,
    Sabs,
    Srel,
    /// Plain ratio `f_i / f_j`, used by min-ratio pipelines.
    Ratio,
}

impl NumericKind {
    pub fn name(self) -> &'static str {
        match self {
            NumericKind::None => "none",
            NumericKind::Abs => "abs",
            NumericKind::Rel => "rel",
            NumericKind::Sabs => "sabs",
            NumericKind::Srel => "srel",
            NumericKind::Ratio => "ratio",
        }
    }
}

impl FromStr for NumericKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "none" => NumericKind::None,
            "abs" => NumericKind::Abs,
            "rel" => NumericKind::Rel,
            "sabs" => NumericKind::Sabs,
            "srel" => NumericKind::Srel,
            "ratio" => NumericKind::Ratio,
            _ => return Err(Error::Parameter(format!("unknown comparison `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Const,
    /// `I(k) = 1 / log2(1 + k)` for `k > 0`.
    Ndcg,
}

impl Weighting {
    pub fn weight(self, k: f64) -> f64 {
        match self {
            Weighting::Const => 1.0,
            Weighting::Ndcg if k > 0.0 => 1.0 / (1.0 + k).log2(),
            Weighting::Ndcg => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    Numeric {
        op: NumericKind,
    },
    Curve {
        weighting: Weighting,
        inner: NumericKind,
    },
    /// `d_y(f_i, f_j) / d_x(S_i, S_j)` with absolute `d_y` and euclidean
    /// `d_x` between group feature centroids.
    DistanceRatio,
}

impl Comparison {
    pub const NONE: Comparison = Comparison::Numeric {
        op: NumericKind::None,
    };
    pub const ABS: Comparison = Comparison::Numeric {
        op: NumericKind::Abs,
    };
    pub const REL: Comparison = Comparison::Numeric {
        op: NumericKind::Rel,
    };
    pub const SABS: Comparison = Comparison::Numeric {
        op: NumericKind::Sabs,
    };
    pub const SREL: Comparison = Comparison::Numeric {
        op: NumericKind::Srel,
    };
    pub const RATIO: Comparison = Comparison::Numeric {
        op: NumericKind::Ratio,
    };
    pub const ABROCA: Comparison = Comparison::Curve {
        weighting: Weighting::Const,
        inner: NumericKind::Abs,
    };

    pub fn is_none(&self) -> bool {
        matches!(
            self,
            Comparison::Numeric {
                op: NumericKind::None
            }
        )
    }
}

impl fmt::Display for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Numeric { op } => f.write_str(op.name()),
            Comparison::Curve { weighting, inner } => {
                let w = match weighting {
                    Weighting::Const => "const",
                    Weighting::Ndcg => "ndcg",
                };
                write!(f, "curve({w},{})", inner.name())
            }
            Comparison::DistanceRatio => f.write_str("dy/dx"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSpec {
    pub comparison: Comparison,
    /// Tolerated deviation; 0 disables thresholding.
    pub epsilon: f64,
}

impl ComparisonSpec {
    pub fn new(comparison: Comparison) -> Self {
        Self {
            comparison,
            epsilon: 0.0,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!(
                "epsilon must be a finite value >= 0, got {epsilon}"
            )));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// [`apply_threshold`] when `epsilon > 0`, otherwise the raw value.
    pub fn threshold(&self, raw: &Outcome) -> Outcome {
        if self.epsilon > 0.0 {
            apply_threshold(raw, self.epsilon)
        } else {
            raw.clone()
        }
    }
}

/// A comparison result plus whether `rel` clamping kicked in.
#[derive(Debug, Clone, PartialEq)]
pub struct Compared {
    pub outcome: Outcome,
    pub clamped: bool,
}

impl Compared {
    fn plain(outcome: Outcome) -> Self {
        Self {
            outcome,
            clamped: false,
        }
    }
}

fn ratio(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            1.0
        } else {
            f64::INFINITY.copysign(a)
        }
    } else {
        a / b
    }
}

/// Numeric comparison on plain reals.
pub fn numeric(kind: NumericKind, a: f64, b: f64) -> Compared {
    let out = |v: f64| Compared::plain(Outcome::from_extended(v));
    match kind {
        NumericKind::None => out(a),
        NumericKind::Abs => out((a - b).abs()),
        NumericKind::Sabs => out(a - b),
        NumericKind::Ratio => out(ratio(a, b)),
        NumericKind::Srel => out(1.0 - ratio(a, b)),
        NumericKind::Rel => {
            let raw = (1.0 - ratio(a, b)).abs();
            if raw > 1.0 {
                Compared {
                    outcome: Outcome::Finite(1.0),
                    clamped: true,
                }
            } else {
                out(raw)
            }
        }
    }
}

/// Numeric comparison of two measure values; NA on either side gives NA.
pub fn compare_numeric(kind: NumericKind, left: &MeasureValue, right: &MeasureValue) -> Compared {
    if kind == NumericKind::None {
        return Compared::plain(measure_outcome(left));
    }
    match (left.value, right.value) {
        (Some(a), Some(b)) => numeric(kind, a, b),
        _ => Compared::plain(Outcome::Na(na_reason(left, right))),
    }
}

fn measure_outcome(v: &MeasureValue) -> Outcome {
    match v.value {
        Some(x) => Outcome::Finite(x),
        None => Outcome::Na(format!(
            "{}: {}",
            v.group_name,
            v.na_reason.as_deref().unwrap_or("not applicable")
        )),
    }
}

fn na_reason(left: &MeasureValue, right: &MeasureValue) -> String {
    [left, right]
        .iter()
        .filter(|v| v.value.is_none())
        .map(|v| {
            format!(
                "{}: {}",
                v.group_name,
                v.na_reason.as_deref().unwrap_or("not applicable")
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Weighted comparison of the curves attached to two measure values.
pub fn compare_curves(
    weighting: Weighting,
    inner: NumericKind,
    left: &MeasureValue,
    right: &MeasureValue,
) -> Result<Compared> {
    let (Some(a), Some(b)) = (&left.curve, &right.curve) else {
        let reason = if left.is_na() || right.is_na() {
            na_reason(left, right)
        } else {
            "no curve".into()
        };
        return Ok(Compared::plain(Outcome::Na(reason)));
    };
    curve_distance(weighting, inner, a, b)
}

/// `(1/∫I) ∫ I(k) (a(k) ⊘ b(k)) dk` over the shared domain.
pub fn curve_distance(
    weighting: Weighting,
    inner: NumericKind,
    a: &Curve,
    b: &Curve,
) -> Result<Compared> {
    match (a, b) {
        (Curve::Continuous(pa), Curve::Continuous(pb)) => {
            if weighting != Weighting::Const {
                return Err(Error::Unsupported(
                    "ndcg weighting is only defined for discrete curves".into(),
                ));
            }
            Ok(continuous_distance(inner, pa, pb))
        }
        (Curve::Discrete(ma), Curve::Discrete(mb)) => {
            Ok(discrete_distance(weighting, inner, ma, mb))
        }
        _ => Err(Error::CurveKindMismatch {
            left: a.kind_name(),
            right: b.kind_name(),
        }),
    }
}

fn discrete_distance(
    weighting: Weighting,
    inner: NumericKind,
    a: &[(u32, f64)],
    b: &[(u32, f64)],
) -> Compared {
    // Union of positions; a curve is zero where it has no mass.
    let mut ks: Vec<u32> = a.iter().chain(b).map(|(k, _)| *k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mass = |m: &[(u32, f64)], k: u32| m.iter().find(|(j, _)| *j == k).map_or(0.0, |(_, v)| *v);

    let mut total = 0.0;
    let mut norm = 0.0;
    let mut clamped = false;
    for k in ks {
        let w = weighting.weight(k as f64);
        norm += w;
        let c = numeric(inner, mass(a, k), mass(b, k));
        clamped |= c.clamped;
        match c.outcome.as_extended() {
            Some(v) if v.is_infinite() && w == 0.0 => {}
            Some(v) => total += w * v,
            None => return c,
        }
    }
    if norm == 0.0 {
        return Compared::plain(Outcome::na("curves share no weighted domain"));
    }
    Compared {
        outcome: Outcome::from_extended(total / norm),
        clamped,
    }
}

/// Non-vertical pieces `(x0, y0, x1, y1)` of a piecewise-linear curve.
fn segments(points: &[(f64, f64)]) -> Vec<(f64, f64, f64, f64)> {
    points
        .windows(2)
        .filter(|w| w[1].0 > w[0].0)
        .map(|w| (w[0].0, w[0].1, w[1].0, w[1].1))
        .collect()
}

/// Evaluates a curve on successive grid intervals, moving monotonically.
struct Cursor {
    segs: Vec<(f64, f64, f64, f64)>,
    at: usize,
}

impl Cursor {
    /// Values at the ends of `[lo, hi]`, which must lie within one segment.
    fn ends(&mut self, lo: f64, hi: f64) -> (f64, f64) {
        while self.at + 1 < self.segs.len() && self.segs[self.at].2 <= lo {
            self.at += 1;
        }
        let (x0, y0, x1, y1) = self.segs[self.at];
        let at = |x: f64| y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        (at(lo), at(hi))
    }
}

fn continuous_distance(inner: NumericKind, a: &[(f64, f64)], b: &[(f64, f64)]) -> Compared {
    let (sa, sb) = (segments(a), segments(b));
    if sa.is_empty() || sb.is_empty() {
        return Compared::plain(Outcome::na("degenerate curve"));
    }
    let lo = sa[0].0.max(sb[0].0);
    let hi = sa[sa.len() - 1].2.min(sb[sb.len() - 1].2);
    if lo >= hi {
        return Compared::plain(Outcome::na("curves share no domain"));
    }
    let mut grid: Vec<f64> = a
        .iter()
        .chain(b)
        .map(|p| p.0)
        .filter(|&x| x > lo && x < hi)
        .chain([lo, hi])
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut ca = Cursor { segs: sa, at: 0 };
    let mut cb = Cursor { segs: sb, at: 0 };
    let mut total = 0.0;
    let mut clamped = false;
    for w in grid.windows(2) {
        let (x0, x1) = (w[0], w[1]);
        let (fa, fb) = ca.ends(x0, x1);
        let (ga, gb) = cb.ends(x0, x1);
        let piece = Piece {
            fa,
            fb,
            ga,
            gb,
            len: x1 - x0,
        };
        let (v, c) = piece.integrate(inner);
        clamped |= c;
        total += v;
    }
    Compared {
        outcome: Outcome::from_extended(total / (hi - lo)),
        clamped,
    }
}

/// Two linear functions `f`, `g` over an interval of length `len`, given by
/// their end values.
#[derive(Debug, Clone, Copy)]
struct Piece {
    fa: f64,
    fb: f64,
    ga: f64,
    gb: f64,
    len: f64,
}

impl Piece {
    fn f(&self, u: f64) -> f64 {
        self.fa + (self.fb - self.fa) * u / self.len
    }

    fn g(&self, u: f64) -> f64 {
        self.ga + (self.gb - self.ga) * u / self.len
    }

    fn sub(&self, u0: f64, u1: f64) -> Piece {
        Piece {
            fa: self.f(u0),
            fb: self.f(u1),
            ga: self.g(u0),
            gb: self.g(u1),
            len: u1 - u0,
        }
    }

    /// Exact integral of `f ⊘ g`; the flag reports `rel` clamping.
    fn integrate(&self, inner: NumericKind) -> (f64, bool) {
        let len = self.len;
        match inner {
            NumericKind::None => ((self.fa + self.fb) / 2.0 * len, false),
            NumericKind::Sabs => ((self.fa - self.ga + (self.fb - self.gb)) / 2.0 * len, false),
            NumericKind::Abs => {
                let (da, db) = (self.fa - self.ga, self.fb - self.gb);
                if da * db >= 0.0 {
                    // Same rounding as `Sabs`, so `abs >= |sabs|` holds exactly.
                    ((da + db).abs() / 2.0 * len, false)
                } else {
                    // Split at the zero of the difference.
                    let cut = len * da.abs() / (da.abs() + db.abs());
                    ((da.abs() * cut + db.abs() * (len - cut)) / 2.0, false)
                }
            }
            NumericKind::Ratio => (self.ratio_integral(), false),
            NumericKind::Srel => (len - self.ratio_integral(), false),
            NumericKind::Rel => self.rel_integral(),
        }
    }

    /// `∫ f/g` with `0/0 = 1`; ±∞ when `g` vanishes under a nonzero `f`.
    fn ratio_integral(&self) -> f64 {
        let len = self.len;
        let (fa, fb, ga, gb) = (self.fa, self.fb, self.ga, self.gb);
        if ga == 0.0 && gb == 0.0 {
            return if fa == 0.0 && fb == 0.0 {
                len
            } else {
                f64::INFINITY.copysign(fa + fb)
            };
        }
        let s = (gb - ga) / len;
        let q = (fb - fa) / len;
        if s == 0.0 {
            return (fa + fb) / 2.0 * len / ga;
        }
        // f/g = q/s + c/g with c = f at the root of g.
        let c = fa - q * ga / s;
        let touches_zero = ga * gb <= 0.0;
        if touches_zero {
            if c.abs() <= 1e-15 * (fa.abs() + fb.abs() + 1.0) {
                return q / s * len;
            }
            return f64::INFINITY.copysign(c * s.signum());
        }
        q / s * len + c / s * (gb / ga).ln()
    }

    /// `∫ min(1, |1 - f/g|)`, split where the integrand changes regime.
    fn rel_integral(&self) -> (f64, bool) {
        let len = self.len;
        let mut cuts = vec![0.0, len];
        // Roots of g - f, 2g - f and f bound the regimes.
        for (a, b) in [
            (self.ga - self.fa, self.gb - self.fb),
            (2.0 * self.ga - self.fa, 2.0 * self.gb - self.fb),
            (self.fa, self.fb),
            (self.ga, self.gb),
        ] {
            if a * b < 0.0 {
                cuts.push(len * a / (a - b));
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let mut total = 0.0;
        let mut clamped = false;
        for w in cuts.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let piece = self.sub(w[0], w[1]);
            let mid = (w[0] + w[1]) / 2.0;
            let raw = (1.0 - ratio(self.f(mid), self.g(mid))).abs();
            if raw > 1.0 {
                clamped = true;
                total += piece.len;
            } else if ratio(self.f(mid), self.g(mid)) <= 1.0 {
                total += piece.len - piece.ratio_integral();
            } else {
                total += piece.ratio_integral() - piece.len;
            }
        }
        (total, clamped)
    }
}

/// `max(0, raw - ε)`. NA passes through.
pub fn apply_threshold(raw: &Outcome, epsilon: f64) -> Outcome {
    match raw {
        Outcome::Finite(v) => Outcome::Finite((v - epsilon).max(0.0)),
        Outcome::Unbounded(Sign::Positive) => raw.clone(),
        Outcome::Unbounded(Sign::Negative) => Outcome::Finite(0.0),
        Outcome::Na(_) => raw.clone(),
    }
}

/// Ratio of output distance to input distance for individual bias.
pub fn distance_ratio(dy: f64, dx: f64) -> Outcome {
    if dx == 0.0 {
        if dy == 0.0 {
            Outcome::na("coincident features with equal outputs")
        } else {
            Outcome::Unbounded(Sign::Positive)
        }
    } else {
        Outcome::Finite(dy / dx)
    }
}
