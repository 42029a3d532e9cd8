//! Compositional bias auditing.
//!
//! A measure of bias is assembled from four blocks: a base measure evaluated
//! per group ([`measures`]), a selection of group pairs ([`selectors`]), a
//! pairwise comparison ([`comparators`]) and a reduction ([`reducers`]).
//! [`engine`] composes them and [`report`] lays many of them out in a grid.

pub mod comparators;
pub mod curve;
pub mod dataset;
pub mod engine;
pub mod error;
pub mod mask;
pub mod measures;
pub mod outcome;
pub mod reducers;
pub mod report;
pub mod selectors;

pub use curve::Curve;
pub use dataset::{load_table, ColumnSpec, Dataset, Group, GroupSet};
pub use engine::{evaluate, individual_bias, named_measure, AssessmentResult, MeasureSpec};
pub use error::{Error, Result};
pub use mask::Mask;
pub use measures::{BaseMeasure, MeasureValue};
pub use outcome::{Outcome, Sign};
pub use report::Report;
