//! Base measures `F(S)` evaluated on one group of samples.
//!
//! Rates are conditional frequencies over a conditioning set; when that set is
//! empty, or a required column is missing, the value is NA with a reason
//! rather than zero. `auc` and `ar@K` attach their curves so that curve
//! comparisons can reach them later.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::curve::Curve;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::mask::Mask;

/// One base measure evaluated on one group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub group_name: String,
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub na_reason: Option<String>,
    /// Size of the set the value was computed over.
    pub support: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<Curve>,
}

impl MeasureValue {
    pub fn new(group_name: impl Into<String>, value: f64, support: usize) -> Self {
        Self {
            group_name: group_name.into(),
            value: Some(value),
            na_reason: None,
            support,
            curve: None,
        }
    }

    pub fn na(group_name: impl Into<String>, reason: impl Into<String>, support: usize) -> Self {
        Self {
            group_name: group_name.into(),
            value: None,
            na_reason: Some(reason.into()),
            support,
            curve: None,
        }
    }

    pub fn with_curve(mut self, curve: Curve) -> Self {
        self.curve = Some(curve);
        self
    }

    pub fn is_na(&self) -> bool {
        self.value.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RateKind {
    Pr,
    Tpr,
    Tnr,
    Fpr,
    Fnr,
    Accuracy,
}

impl RateKind {
    pub fn needs_labels(self) -> bool {
        !matches!(self, RateKind::Pr)
    }
}

/// Identifier of a base measure, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseMeasure {
    Rate(RateKind),
    Auc,
    AvgRepresentation(usize),
    TopkRate(usize),
}

impl BaseMeasure {
    pub const PR: BaseMeasure = BaseMeasure::Rate(RateKind::Pr);
    pub const TPR: BaseMeasure = BaseMeasure::Rate(RateKind::Tpr);
    pub const TNR: BaseMeasure = BaseMeasure::Rate(RateKind::Tnr);
    pub const FPR: BaseMeasure = BaseMeasure::Rate(RateKind::Fpr);
    pub const FNR: BaseMeasure = BaseMeasure::Rate(RateKind::Fnr);
    pub const ACCURACY: BaseMeasure = BaseMeasure::Rate(RateKind::Accuracy);

    pub fn known_names() -> Vec<String> {
        [
            "pr", "tpr", "tnr", "fpr", "fnr", "accuracy", "auc", "ar@K", "topk@K",
        ]
        .map(String::from)
        .to_vec()
    }

    pub fn needs_labels(&self) -> bool {
        match self {
            BaseMeasure::Rate(kind) => kind.needs_labels(),
            BaseMeasure::Auc => true,
            BaseMeasure::AvgRepresentation(_) | BaseMeasure::TopkRate(_) => false,
        }
    }

    pub fn needs_scores(&self) -> bool {
        !matches!(self, BaseMeasure::Rate(_))
    }

    /// Evaluate on the group `mask`. Only invalid parameters are errors;
    /// everything else that makes the value undefined yields NA.
    pub fn compute(
        &self,
        group_name: &str,
        mask: &Mask,
        dataset: &Dataset,
    ) -> Result<MeasureValue> {
        match *self {
            BaseMeasure::Rate(kind) => Ok(rate_measure(kind, group_name, mask, dataset)),
            BaseMeasure::Auc => Ok(auc(group_name, mask, dataset)),
            BaseMeasure::AvgRepresentation(k) => avg_representation(k, group_name, mask, dataset),
            BaseMeasure::TopkRate(k) => topk_rate(k, group_name, mask, dataset),
        }
    }
}

impl fmt::Display for BaseMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseMeasure::Rate(RateKind::Pr) => f.write_str("pr"),
            BaseMeasure::Rate(RateKind::Tpr) => f.write_str("tpr"),
            BaseMeasure::Rate(RateKind::Tnr) => f.write_str("tnr"),
            BaseMeasure::Rate(RateKind::Fpr) => f.write_str("fpr"),
            BaseMeasure::Rate(RateKind::Fnr) => f.write_str("fnr"),
            BaseMeasure::Rate(RateKind::Accuracy) => f.write_str("accuracy"),
            BaseMeasure::Auc => f.write_str("auc"),
            BaseMeasure::AvgRepresentation(k) => write!(f, "ar@{k}"),
            BaseMeasure::TopkRate(k) => write!(f, "topk@{k}"),
        }
    }
}

impl FromStr for BaseMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let unknown = || Error::UnknownBase {
            name: s.to_owned(),
            known: BaseMeasure::known_names(),
        };
        let parse_k = |k: &str| -> Result<usize> {
            k.parse::<usize>()
                .ok()
                .filter(|&k| k > 0)
                .ok_or_else(|| Error::Parameter(format!("`{s}`: K must be a positive integer")))
        };
        Ok(match s {
            "pr" => BaseMeasure::PR,
            "tpr" => BaseMeasure::TPR,
            "tnr" => BaseMeasure::TNR,
            "fpr" => BaseMeasure::FPR,
            "fnr" => BaseMeasure::FNR,
            "accuracy" => BaseMeasure::ACCURACY,
            "auc" => BaseMeasure::Auc,
            _ => match s.split_once('@') {
                Some(("ar", k)) => BaseMeasure::AvgRepresentation(parse_k(k)?),
                Some(("topk", k)) => BaseMeasure::TopkRate(parse_k(k)?),
                _ => return Err(unknown()),
            },
        })
    }
}

type RowTest<'a> = Box<dyn Fn(usize) -> bool + 'a>;

/// Conditional rate of `kind` on the group. `tpr`/`tnr` are counted
/// directly, not derived as complements.
pub fn rate_measure(
    kind: RateKind,
    group_name: &str,
    mask: &Mask,
    dataset: &Dataset,
) -> MeasureValue {
    let preds = dataset.predictions();
    let labels = dataset.labels();
    if kind.needs_labels() && labels.is_none() {
        return MeasureValue::na(group_name, "missing labels", 0);
    }
    let label = |row: usize| labels.map_or(0, |l| l[row]);

    // (conditioning predicate, success predicate)
    let (condition, success): (RowTest, RowTest) = match kind {
        RateKind::Pr => (Box::new(|_| true), Box::new(|r| preds[r] == 1)),
        RateKind::Tpr => (Box::new(|r| label(r) == 1), Box::new(|r| preds[r] == 1)),
        RateKind::Fnr => (Box::new(|r| label(r) == 1), Box::new(|r| preds[r] == 0)),
        RateKind::Tnr => (Box::new(|r| label(r) == 0), Box::new(|r| preds[r] == 0)),
        RateKind::Fpr => (Box::new(|r| label(r) == 0), Box::new(|r| preds[r] == 1)),
        RateKind::Accuracy => (Box::new(|_| true), Box::new(|r| preds[r] == label(r))),
    };

    let mut support = 0usize;
    let mut hits = 0usize;
    for row in mask.ones().filter(|&r| condition(r)) {
        support += 1;
        if success(row) {
            hits += 1;
        }
    }
    if support == 0 {
        let reason = match kind {
            RateKind::Tpr | RateKind::Fnr => "no positives in group",
            RateKind::Tnr | RateKind::Fpr => "no negatives in group",
            RateKind::Pr | RateKind::Accuracy => "empty group",
        };
        return MeasureValue::na(group_name, reason, 0);
    }
    MeasureValue::new(group_name, hits as f64 / support as f64, support)
}

/// Roc curve of the group: thresholds sweep the distinct scores from high to
/// low with `score >= θ` predicting positive. Tied scores move together.
/// Collinear interior points are dropped.
pub fn roc_curve(mask: &Mask, dataset: &Dataset) -> std::result::Result<Curve, String> {
    let scores = dataset.scores().ok_or("missing scores")?;
    let labels = dataset.labels().ok_or("missing labels")?;

    let mut rows: Vec<(f64, u8)> = mask.ones().map(|r| (scores[r], labels[r])).collect();
    let positives = rows.iter().filter(|(_, l)| *l == 1).count() as i64;
    let negatives = rows.len() as i64 - positives;
    if positives == 0 {
        return Err("no positives in group".into());
    }
    if negatives == 0 {
        return Err("no negatives in group".into());
    }
    rows.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Integer (fp, tp) counts keep the collinearity test exact.
    let mut points: Vec<(i64, i64)> = vec![(0, 0)];
    let (mut fp, mut tp) = (0i64, 0i64);
    let mut i = 0;
    while i < rows.len() {
        let threshold = rows[i].0;
        while i < rows.len() && rows[i].0 == threshold {
            if rows[i].1 == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        push_simplified(&mut points, (fp, tp));
    }

    Ok(Curve::Continuous(
        points
            .into_iter()
            .map(|(fp, tp)| (fp as f64 / negatives as f64, tp as f64 / positives as f64))
            .collect(),
    ))
}

fn push_simplified(points: &mut Vec<(i64, i64)>, next: (i64, i64)) {
    if points.len() >= 2 {
        let a = points[points.len() - 2];
        let b = points[points.len() - 1];
        let cross = (b.0 - a.0) * (next.1 - a.1) - (b.1 - a.1) * (next.0 - a.0);
        if cross == 0 {
            points.pop();
        }
    }
    points.push(next);
}

/// Trapezoidal area under the group's roc curve; the curve is attached.
pub fn auc(group_name: &str, mask: &Mask, dataset: &Dataset) -> MeasureValue {
    match roc_curve(mask, dataset) {
        Ok(curve) => MeasureValue::new(group_name, curve.area(), mask.count()).with_curve(curve),
        Err(reason) => MeasureValue::na(group_name, reason, mask.count()),
    }
}

/// Row indices by descending score, ties by ascending row index.
fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => a.cmp(&b),
        other => other,
    });
    order
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("K must be at least 1".into()));
    }
    if k > n {
        return Err(Error::Parameter(format!(
            "K = {k} exceeds the dataset size {n}"
        )));
    }
    Ok(())
}

/// Mean over `k = 1..=K` of the group's share of the top-`k` scored samples;
/// the per-`k` shares are attached as a discrete curve.
pub fn avg_representation(
    k: usize,
    group_name: &str,
    mask: &Mask,
    dataset: &Dataset,
) -> Result<MeasureValue> {
    check_k(k, dataset.len())?;
    let Some(scores) = dataset.scores() else {
        return Ok(MeasureValue::na(group_name, "missing scores", 0));
    };
    let order = ranking(scores);
    let mut members = 0usize;
    let mut masses = Vec::with_capacity(k);
    for (idx, &row) in order.iter().take(k).enumerate() {
        if mask.get(row) {
            members += 1;
        }
        masses.push(((idx + 1) as u32, members as f64 / (idx + 1) as f64));
    }
    let value = masses.iter().map(|(_, p)| p).sum::<f64>() / k as f64;
    Ok(MeasureValue::new(group_name, value, k).with_curve(Curve::Discrete(masses)))
}

/// Share of the top-`K` scored samples that belong to the group.
pub fn topk_rate(
    k: usize,
    group_name: &str,
    mask: &Mask,
    dataset: &Dataset,
) -> Result<MeasureValue> {
    check_k(k, dataset.len())?;
    let Some(scores) = dataset.scores() else {
        return Ok(MeasureValue::na(group_name, "missing scores", 0));
    };
    let members = ranking(scores)
        .into_iter()
        .take(k)
        .filter(|&r| mask.get(r))
        .count();
    Ok(MeasureValue::new(group_name, members as f64 / k as f64, k))
}
