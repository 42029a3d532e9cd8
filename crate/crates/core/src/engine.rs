//! Composition of the four blocks into a bias value:
//!
//! ```text
//! F_bias = ⊙ over (S_i, S_j) in C(𝕊, S_all) of F(S_i) ⊘ F(S_j)
//! ```
//!
//! [`evaluate`] runs one [`MeasureSpec`] and keeps a full [`Trace`] of how
//! the value came about. [`named_measure`] maps literature measures onto
//! specs.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::comparators::{
    self, compare_curves, compare_numeric, distance_ratio, Comparison, ComparisonSpec,
};
use crate::dataset::{Dataset, GroupSet};
use crate::error::{Error, Result};
use crate::mask::Mask;
use crate::measures::{BaseMeasure, MeasureValue};
use crate::outcome::Outcome;
use crate::reducers::{reduce_items, Reduced, Reduction, ReductionItem, SelfPairs};
use crate::selectors::{select_intersectional, select_with_fallback, Selection, Strategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectorSpec {
    pub strategy: Strategy,
    /// Compare all nonempty intersections of the groups instead.
    pub intersectional: bool,
    /// Ignore the groups and compare individual samples.
    pub individual: bool,
}

impl SelectorSpec {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            intersectional: false,
            individual: false,
        }
    }
}

/// One `(F, C, ⊘, ⊙)` tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSpec {
    pub base: BaseMeasure,
    pub selector: SelectorSpec,
    pub comparison: ComparisonSpec,
    pub reduction: Reduction,
}

impl MeasureSpec {
    pub fn new(
        base: BaseMeasure,
        strategy: Strategy,
        comparison: Comparison,
        reduction: Reduction,
    ) -> Self {
        Self {
            base,
            selector: SelectorSpec::new(strategy),
            comparison: ComparisonSpec::new(comparison),
            reduction,
        }
    }

    /// Build from textual identifiers, e.g. `("pr", "compl", "srel", "max")`.
    /// Curve comparisons are written `curve(const,abs)`; individual bias
    /// distances as `dy/dx`.
    pub fn parse(base: &str, selector: &str, comparison: &str, reduction: &str) -> Result<Self> {
        let comparison = match comparison {
            "dy/dx" => Comparison::DistanceRatio,
            c if c.starts_with("curve(") && c.ends_with(')') => {
                let inside = &c["curve(".len()..c.len() - 1];
                let (w, inner) = inside
                    .split_once(',')
                    .ok_or_else(|| Error::Parameter(format!("malformed curve comparison `{c}`")))?;
                let weighting = match w.trim() {
                    "const" => comparators::Weighting::Const,
                    "ndcg" => comparators::Weighting::Ndcg,
                    other => return Err(Error::Parameter(format!("unknown weighting `{other}`"))),
                };
                Comparison::Curve {
                    weighting,
                    inner: inner.trim().parse()?,
                }
            }
            op => Comparison::Numeric { op: op.parse()? },
        };
        Ok(Self::new(
            base.parse()?,
            selector.parse()?,
            comparison,
            reduction.parse()?,
        ))
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        self.comparison = self.comparison.with_epsilon(epsilon)?;
        Ok(self)
    }

    pub fn intersectional(mut self, on: bool) -> Self {
        self.selector.intersectional = on;
        self
    }

    fn self_pairs(&self) -> SelfPairs {
        // No comparison happens under `none`, so a self-pair is just a group value.
        if self.comparison.comparison.is_none() {
            SelfPairs::Keep
        } else {
            SelfPairs::Skip
        }
    }
}

impl fmt::Display for MeasureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut selector = self.selector.strategy.to_string();
        if self.selector.individual {
            selector = format!("individual-{selector}");
        }
        if self.selector.intersectional {
            selector = format!("intersect-{selector}");
        }
        write!(
            f,
            "({}, {}, {}",
            self.base, selector, self.comparison.comparison
        )?;
        if self.comparison.epsilon > 0.0 {
            write!(f, "_eps{}", self.comparison.epsilon)?;
        }
        write!(f, ", {})", self.reduction)
    }
}

/// Base value of one distinct group mask.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEntry {
    pub name: String,
    pub size: usize,
    pub share: f64,
    pub measure: MeasureValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairTrace {
    pub left: String,
    pub right: String,
    /// Indices into [`Trace::groups`].
    pub left_group: usize,
    pub right_group: usize,
    /// Comparison before thresholding.
    pub raw: Outcome,
    pub clamped: bool,
    /// Input to the reduction.
    pub item: ReductionItem,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub spec: MeasureSpec,
    pub groups: Vec<GroupEntry>,
    pub pairs: Vec<PairTrace>,
    pub self_pairs: SelfPairs,
    pub reduction: Reduced,
    pub warnings: Vec<String>,
}

impl Trace {
    /// Reduce the recorded pair values again.
    pub fn rereduce(&self) -> Outcome {
        let items: Vec<ReductionItem> = self.pairs.iter().map(|p| p.item.clone()).collect();
        reduce_items(self.spec.reduction, &items, self.self_pairs).value
    }

    pub fn winner(&self) -> Option<&PairTrace> {
        self.reduction.winner.map(|i| &self.pairs[i])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentResult {
    pub value: Outcome,
    pub trace: Trace,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    /// Compute each distinct group mask once.
    pub memoize: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self { memoize: true }
    }
}

pub fn evaluate(spec: &MeasureSpec, dataset: &Dataset, gs: &GroupSet) -> Result<AssessmentResult> {
    evaluate_with(spec, dataset, gs, EvalOptions::default())
}

pub fn evaluate_with(
    spec: &MeasureSpec,
    dataset: &Dataset,
    gs: &GroupSet,
    options: EvalOptions,
) -> Result<AssessmentResult> {
    if gs.population_size() != dataset.len() && !gs.is_empty() {
        return Err(Error::LengthMismatch {
            column: "groups".into(),
            len: gs.population_size(),
            expected: dataset.len(),
        });
    }
    let population = dataset.population();
    let selection = if spec.selector.individual {
        select_with_fallback(
            spec.selector.strategy,
            &GroupSet::empty(dataset.len()),
            &population,
        )
    } else if spec.selector.intersectional && !gs.is_empty() {
        select_intersectional(spec.selector.strategy, gs, &population)
    } else {
        select_with_fallback(spec.selector.strategy, gs, &population)
    };

    let missing = if spec.base.needs_labels() && dataset.labels().is_none() {
        Some("missing labels")
    } else if spec.base.needs_scores() && dataset.scores().is_none() {
        Some("missing scores")
    } else if spec.comparison.comparison == Comparison::DistanceRatio
        && dataset.features().is_none()
    {
        return Err(Error::MissingFeatures);
    } else {
        None
    };
    if let Some(reason) = missing {
        return Ok(not_applicable(spec, reason, selection));
    }

    let mut ev = Evaluator {
        spec,
        dataset,
        options,
        index: HashMap::new(),
        groups: Vec::new(),
        masks: Vec::new(),
        centroids: Vec::new(),
    };

    let mut pairs = Vec::with_capacity(selection.len());
    for pair in &selection.pairs {
        let li = ev.group(&pair.left.name, &pair.left.mask)?;
        let ri = ev.group(&pair.right.name, &pair.right.mask)?;
        let compared = ev.compare(li, ri)?;
        let value = spec.comparison.threshold(&compared.outcome);
        pairs.push(PairTrace {
            left: pair.left.name.to_string(),
            right: pair.right.name.to_string(),
            left_group: li,
            right_group: ri,
            raw: compared.outcome,
            clamped: compared.clamped,
            item: ReductionItem::from_pair(pair, value),
        });
    }

    let items: Vec<ReductionItem> = pairs.iter().map(|p| p.item.clone()).collect();
    let reduced = reduce_items(spec.reduction, &items, spec.self_pairs());
    let mut warnings = selection.warnings;
    let clamped = pairs.iter().filter(|p| p.clamped).count();
    if clamped > 0 {
        warnings.push(format!("{clamped} rel comparison(s) clamped to [0, 1]"));
    }
    warnings.extend(reduced.warnings.iter().cloned());

    Ok(AssessmentResult {
        value: reduced.value.clone(),
        trace: Trace {
            spec: *spec,
            groups: ev.groups,
            pairs,
            self_pairs: spec.self_pairs(),
            reduction: reduced,
            warnings,
        },
    })
}

fn not_applicable(spec: &MeasureSpec, reason: &str, selection: Selection) -> AssessmentResult {
    AssessmentResult {
        value: Outcome::na(reason),
        trace: Trace {
            spec: *spec,
            groups: Vec::new(),
            pairs: Vec::new(),
            self_pairs: spec.self_pairs(),
            reduction: Reduced {
                value: Outcome::na(reason),
                status: Vec::new(),
                winner: None,
                total_weight: None,
                warnings: Vec::new(),
            },
            warnings: selection.warnings,
        },
    }
}

struct Evaluator<'a> {
    spec: &'a MeasureSpec,
    dataset: &'a Dataset,
    options: EvalOptions,
    index: HashMap<Arc<Mask>, usize>,
    groups: Vec<GroupEntry>,
    masks: Vec<Arc<Mask>>,
    centroids: Vec<Option<Vec<f64>>>,
}

impl Evaluator<'_> {
    fn group(&mut self, name: &str, mask: &Arc<Mask>) -> Result<usize> {
        if self.options.memoize {
            if let Some(&i) = self.index.get(mask) {
                return Ok(i);
            }
        }
        let measure = self.spec.base.compute(name, mask, self.dataset)?;
        if let Some(&i) = self.index.get(mask) {
            debug_assert_eq!(self.groups[i].measure.value, measure.value);
            return Ok(i);
        }
        let i = self.groups.len();
        self.groups.push(GroupEntry {
            name: name.to_owned(),
            size: mask.count(),
            share: mask.share(),
            measure,
        });
        self.centroids.push(None);
        self.masks.push(Arc::clone(mask));
        self.index.insert(Arc::clone(mask), i);
        Ok(i)
    }

    fn centroid(&mut self, i: usize, mask: &Mask) -> &[f64] {
        if self.centroids[i].is_none() {
            let features = self.dataset.features().expect("checked before evaluation");
            let mut sum = vec![0.0; features[0].len()];
            let mut count = 0usize;
            for row in mask.ones() {
                for (s, x) in sum.iter_mut().zip(&features[row]) {
                    *s += x;
                }
                count += 1;
            }
            for s in &mut sum {
                *s /= count as f64;
            }
            self.centroids[i] = Some(sum);
        }
        self.centroids[i].as_deref().expect("just filled")
    }

    fn mask_of(&self, i: usize) -> Arc<Mask> {
        Arc::clone(&self.masks[i])
    }

    fn compare(&mut self, li: usize, ri: usize) -> Result<comparators::Compared> {
        let (l, r) = (&self.groups[li].measure, &self.groups[ri].measure);
        match self.spec.comparison.comparison {
            Comparison::Numeric { op } => Ok(compare_numeric(op, l, r)),
            Comparison::Curve { weighting, inner } => compare_curves(weighting, inner, l, r),
            Comparison::DistanceRatio => {
                let dy = match (l.value, r.value) {
                    (Some(a), Some(b)) => (a - b).abs(),
                    _ => {
                        return Ok(compare_numeric(comparators::NumericKind::Abs, l, r));
                    }
                };
                let (lm, rm) = (self.mask_of(li), self.mask_of(ri));
                let a = self.centroid(li, &lm).to_vec();
                let b = self.centroid(ri, &rm);
                Ok(comparators::Compared {
                    outcome: distance_ratio(dy, euclidean(&a, b)),
                    clamped: false,
                })
            }
        }
    }
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Individual bias: the largest `|c(x_i) - c(x_j)| / ‖x_i - x_j‖` over
/// unordered sample pairs. Pairs with equal features and equal predictions
/// are skipped; equal features with different predictions are unbounded.
pub fn individual_bias(dataset: &Dataset) -> Result<AssessmentResult> {
    let features = dataset.features().ok_or(Error::MissingFeatures)?;
    let n = dataset.len();
    if n < 2 {
        return Err(Error::Parameter(
            "individual bias needs at least two samples".into(),
        ));
    }
    let preds = dataset.predictions();
    let spec = named_measure("ib")?;

    let groups: Vec<GroupEntry> = (0..n)
        .map(|row| GroupEntry {
            name: format!("#{}", row + 1),
            size: 1,
            share: 1.0 / n as f64,
            measure: MeasureValue::new(format!("#{}", row + 1), preds[row] as f64, 1),
        })
        .collect();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let dy = (preds[i] as f64 - preds[j] as f64).abs();
            let value = distance_ratio(dy, euclidean(&features[i], &features[j]));
            pairs.push(PairTrace {
                left: groups[i].name.clone(),
                right: groups[j].name.clone(),
                left_group: i,
                right_group: j,
                raw: value.clone(),
                clamped: false,
                item: ReductionItem {
                    value,
                    left_share: 1.0 / n as f64,
                    right_share: 1.0 / n as f64,
                    self_pair: false,
                },
            });
        }
    }
    let items: Vec<ReductionItem> = pairs.iter().map(|p| p.item.clone()).collect();
    let reduced = reduce_items(Reduction::Max, &items, SelfPairs::Skip);
    Ok(AssessmentResult {
        value: reduced.value.clone(),
        trace: Trace {
            spec,
            groups,
            pairs,
            self_pairs: SelfPairs::Skip,
            warnings: reduced.warnings.clone(),
            reduction: reduced,
        },
    })
}

pub const NAMED_MEASURES: &[&str] = &[
    "one_minus_prule",
    "cv",
    "delta_fpr",
    "delta_fnr",
    "delta_eo",
    "spsf",
    "fpsf",
    "db",
    "wcb(<base>)",
    "ib",
    "abroca",
];

/// Registry of literature measures as block tuples.
pub fn named_measure(name: &str) -> Result<MeasureSpec> {
    use BaseMeasure as B;
    use Comparison as C;
    use Reduction as R;
    use Strategy as S;

    let spec = match name {
        "one_minus_prule" => MeasureSpec::new(B::PR, S::Compl, C::SREL, R::Max),
        "cv" => MeasureSpec::new(B::PR, S::Compl, C::SABS, R::Max),
        "delta_fpr" => MeasureSpec::new(B::FPR, S::Compl, C::SABS, R::Max),
        "delta_fnr" => MeasureSpec::new(B::FNR, S::Compl, C::SABS, R::Max),
        "delta_eo" => MeasureSpec::new(B::TPR, S::Compl, C::SABS, R::Max),
        "spsf" => MeasureSpec::new(B::PR, S::VsAny, C::ABS, R::Wmean),
        "fpsf" => MeasureSpec::new(B::FPR, S::VsAny, C::ABS, R::Wmean),
        "db" => MeasureSpec::new(B::PR, S::Pairs, C::SREL, R::Max),
        "abroca" => MeasureSpec::new(B::Auc, S::Compl, C::ABROCA, R::Max),
        "ib" => {
            let mut spec = MeasureSpec::new(B::PR, S::Pairs, C::DistanceRatio, R::Max);
            spec.selector.individual = true;
            spec
        }
        _ => {
            let inner = name
                .strip_prefix("wcb(")
                .and_then(|s| s.strip_suffix(')'))
                .or_else(|| name.strip_prefix("wcb:"));
            match inner {
                Some(base) => MeasureSpec::new(base.parse()?, S::Pairs, C::SREL, R::Max),
                None => {
                    return Err(Error::UnknownMeasure {
                        name: name.to_owned(),
                        known: NAMED_MEASURES.iter().map(|s| s.to_string()).collect(),
                    })
                }
            }
        }
    };
    Ok(spec)
}
