//! Multi-cell bias reports.
//!
//! Rows are base measures, columns are comparison∘reduction pipelines. Every
//! cell keeps its full trace, so it can be explained or recomputed later.
//! JSON output is key-sorted with numbers at six fixed decimals.

use std::fmt::Write as _;

use serde_json::{json, Map, Number, Value};

use crate::comparators::Comparison;
use crate::curve::Curve;
use crate::dataset::{Dataset, GroupSet};
use crate::engine::{evaluate, AssessmentResult, MeasureSpec, SelectorSpec};
use crate::error::{Error, Result};
use crate::measures::BaseMeasure;
use crate::outcome::{Outcome, Sign};
use crate::reducers::{reduce_items, ItemStatus, Reduction, ReductionItem, SelfPairs};
use crate::selectors::Strategy;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// One report column: a comparison followed by a reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct Pipeline {
    pub name: String,
    pub comparison: Comparison,
    pub reduction: Reduction,
}

impl Pipeline {
    pub fn new(name: &str, comparison: Comparison, reduction: Reduction) -> Self {
        Self {
            name: name.to_owned(),
            comparison,
            reduction,
        }
    }

    /// min, wmean, max of plain group values; largest absolute difference;
    /// smallest ratio.
    pub fn defaults() -> Vec<Pipeline> {
        vec![
            Pipeline::new("min", Comparison::NONE, Reduction::Min),
            Pipeline::new("wmean", Comparison::NONE, Reduction::Wmean),
            Pipeline::new("max", Comparison::NONE, Reduction::Max),
            Pipeline::new("maxdiff", Comparison::ABS, Reduction::Max),
            Pipeline::new("minratio", Comparison::RATIO, Reduction::Min),
        ]
    }

    fn thresholdable(&self) -> bool {
        !matches!(
            self.comparison,
            Comparison::Numeric {
                op: crate::comparators::NumericKind::None | crate::comparators::NumericKind::Ratio
            }
        )
    }
}

#[derive(Debug, Clone)]
pub struct ReportConfig {
    pub intersectional: bool,
    /// Threshold for deviation columns; 0 disables it.
    pub epsilon: f64,
    /// K for the top-k rows; defaults to `min(10, n)`.
    pub top_k: Option<usize>,
    pub columns: Vec<Pipeline>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self {
            intersectional: false,
            epsilon: 0.0,
            top_k: None,
            columns: Pipeline::defaults(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metadata {
    pub n: usize,
    pub dataset_columns: Vec<String>,
    pub groups: Vec<String>,
    pub selector: String,
    pub intersectional: bool,
    pub tool_version: String,
}

impl Metadata {
    fn same_dataset(&self, other: &Metadata) -> bool {
        self.n == other.n && self.dataset_columns == other.dataset_columns
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    /// `multi`, `uni` or `combined`; used to prefix columns when combining.
    pub kind: String,
    pub rows: Vec<String>,
    pub columns: Vec<String>,
    /// `cells[row][column]`; `None` where a combined report has no cell.
    pub cells: Vec<Vec<Option<AssessmentResult>>>,
    pub metadata: Metadata,
}

/// Base measures that the dataset's columns support.
pub fn applicable_rows(dataset: &Dataset, top_k: Option<usize>) -> Vec<BaseMeasure> {
    let mut rows = Vec::new();
    let has_labels = dataset.labels().is_some();
    if has_labels {
        rows.extend([
            BaseMeasure::PR,
            BaseMeasure::ACCURACY,
            BaseMeasure::TPR,
            BaseMeasure::TNR,
            BaseMeasure::FPR,
            BaseMeasure::FNR,
        ]);
    }
    if dataset.scores().is_some() {
        if has_labels {
            rows.push(BaseMeasure::Auc);
        }
        let k = top_k.unwrap_or(10).min(dataset.len());
        rows.push(BaseMeasure::AvgRepresentation(k));
        rows.push(BaseMeasure::TopkRate(k));
    }
    rows
}

/// All group pairs (`pairs` selection).
pub fn multireport(dataset: &Dataset, gs: &GroupSet, config: &ReportConfig) -> Result<Report> {
    build("multi", Strategy::Pairs, dataset, gs, config)
}

/// Every group against the population (`vsany` selection).
pub fn unireport(dataset: &Dataset, gs: &GroupSet, config: &ReportConfig) -> Result<Report> {
    build("uni", Strategy::VsAny, dataset, gs, config)
}

fn build(
    kind: &str,
    strategy: Strategy,
    dataset: &Dataset,
    gs: &GroupSet,
    config: &ReportConfig,
) -> Result<Report> {
    if let Some(k) = config.top_k {
        if k == 0 || k > dataset.len() {
            return Err(Error::Parameter(format!(
                "top-k {k} must be within 1..={}",
                dataset.len()
            )));
        }
    }
    let bases = applicable_rows(dataset, config.top_k);
    if bases.is_empty() {
        return Err(Error::NothingToReport);
    }
    let mut cells = Vec::with_capacity(bases.len());
    for base in &bases {
        let mut row = Vec::with_capacity(config.columns.len());
        for pipeline in &config.columns {
            let mut spec = MeasureSpec {
                base: *base,
                selector: SelectorSpec {
                    strategy,
                    intersectional: config.intersectional,
                    individual: false,
                },
                comparison: crate::comparators::ComparisonSpec::new(pipeline.comparison),
                reduction: pipeline.reduction,
            };
            if pipeline.thresholdable() {
                spec = spec.with_epsilon(config.epsilon)?;
            }
            row.push(Some(evaluate(&spec, dataset, gs)?));
        }
        cells.push(row);
    }
    let groups = if config.intersectional {
        gs.intersectional().names()
    } else {
        gs.names()
    };
    Ok(Report {
        kind: kind.to_owned(),
        rows: bases.iter().map(|b| b.to_string()).collect(),
        columns: config.columns.iter().map(|p| p.name.clone()).collect(),
        cells,
        metadata: Metadata {
            n: dataset.len(),
            dataset_columns: dataset.column_names().to_vec(),
            groups,
            selector: strategy.to_string(),
            intersectional: config.intersectional,
            tool_version: TOOL_VERSION.to_owned(),
        },
    })
}

/// Join reports into one grid. Columns are prefixed with each report's kind
/// (`multi:minratio`); a single report is returned unchanged.
pub fn combine(reports: &[Report]) -> Result<Report> {
    let Some(first) = reports.first() else {
        return Err(Error::Parameter("combine needs at least one report".into()));
    };
    if reports.len() == 1 {
        return Ok(first.clone());
    }
    if reports
        .iter()
        .any(|r| !r.metadata.same_dataset(&first.metadata))
    {
        return Err(Error::FingerprintMismatch);
    }

    let mut rows: Vec<String> = Vec::new();
    let mut columns: Vec<String> = Vec::new();
    for r in reports {
        for row in &r.rows {
            if !rows.contains(row) {
                rows.push(row.clone());
            }
        }
        for col in &r.columns {
            let name = prefixed(r, col);
            if !columns.contains(&name) {
                columns.push(name);
            }
        }
    }

    let mut cells: Vec<Vec<Option<AssessmentResult>>> = vec![vec![None; columns.len()]; rows.len()];
    for r in reports {
        for (ri, row) in r.rows.iter().enumerate() {
            let to_row = rows.iter().position(|x| x == row).expect("row collected");
            for (ci, col) in r.columns.iter().enumerate() {
                let name = prefixed(r, col);
                let to_col = columns
                    .iter()
                    .position(|x| *x == name)
                    .expect("column collected");
                let slot = &mut cells[to_row][to_col];
                if slot.is_some() {
                    return Err(Error::CellClash {
                        row: row.clone(),
                        column: name,
                    });
                }
                *slot = r.cells[ri][ci].clone();
            }
        }
    }

    let mut groups = Vec::new();
    for r in reports {
        for g in &r.metadata.groups {
            if !groups.contains(g) {
                groups.push(g.clone());
            }
        }
    }
    Ok(Report {
        kind: "combined".into(),
        rows,
        columns,
        cells,
        metadata: Metadata {
            n: first.metadata.n,
            dataset_columns: first.metadata.dataset_columns.clone(),
            groups,
            selector: reports
                .iter()
                .map(|r| {
                    if r.kind == "combined" {
                        r.metadata.selector.clone()
                    } else {
                        format!("{}:{}", r.kind, r.metadata.selector)
                    }
                })
                .collect::<Vec<_>>()
                .join("+"),
            intersectional: reports.iter().any(|r| r.metadata.intersectional),
            tool_version: TOOL_VERSION.to_owned(),
        },
    })
}

fn prefixed(report: &Report, column: &str) -> String {
    if report.kind == "combined" {
        column.to_owned()
    } else {
        format!("{}:{column}", report.kind)
    }
}

impl Report {
    pub fn cell(&self, row: &str, column: &str) -> Result<&AssessmentResult> {
        let ri = self.rows.iter().position(|r| r == row);
        let ci = self.columns.iter().position(|c| c == column);
        match (ri, ci) {
            (Some(ri), Some(ci)) => self.cells[ri][ci].as_ref(),
            _ => None,
        }
        .ok_or_else(|| Error::UnknownCell {
            row: row.to_owned(),
            column: column.to_owned(),
            rows: self.rows.clone(),
            columns: self.columns.clone(),
        })
    }

    pub fn value(&self, row: &str, column: &str) -> Result<&Outcome> {
        Ok(&self.cell(row, column)?.value)
    }

    fn iter_cells(&self) -> impl Iterator<Item = (&str, &str, Option<&AssessmentResult>)> {
        self.rows.iter().enumerate().flat_map(move |(ri, row)| {
            self.columns
                .iter()
                .enumerate()
                .map(move |(ci, col)| (row.as_str(), col.as_str(), self.cells[ri][ci].as_ref()))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            _ => Err(Error::Parameter(format!("unknown format `{s}`"))),
        }
    }
}

pub fn serialize(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut text =
                serde_json::to_string_pretty(&to_json(report)).expect("json values serialize");
            text.push('\n');
            text
        }
        Format::Csv => to_csv(report),
        Format::Text => to_text(report),
    }
}

/// Fixed six-decimal JSON number.
pub fn fixed(x: f64) -> Value {
    let mut s = format!("{x:.6}");
    if s == "-0.000000" {
        s = "0.000000".into();
    }
    Value::Number(
        s.parse::<Number>()
            .expect("formatted float is a JSON number"),
    )
}

pub fn outcome_json(o: &Outcome) -> Value {
    match o {
        Outcome::Finite(v) => fixed(*v),
        Outcome::Unbounded(Sign::Positive) => Value::String("+unbounded".into()),
        Outcome::Unbounded(Sign::Negative) => Value::String("-unbounded".into()),
        Outcome::Na(_) => Value::Null,
    }
}

fn outcome_from_json(v: &Value) -> Outcome {
    match v {
        Value::Number(n) => Outcome::Finite(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) if s == "+unbounded" => Outcome::Unbounded(Sign::Positive),
        Value::String(s) if s == "-unbounded" => Outcome::Unbounded(Sign::Negative),
        _ => Outcome::na("null"),
    }
}

fn cell_key(row: &str, column: &str) -> String {
    format!("{row}/{column}")
}

fn curve_json(curve: &Curve) -> Value {
    let points: Vec<Value> = match curve {
        Curve::Continuous(p) => p
            .iter()
            .map(|(x, y)| json!([fixed(*x), fixed(*y)]))
            .collect(),
        Curve::Discrete(m) => m.iter().map(|(k, v)| json!([k, fixed(*v)])).collect(),
    };
    json!({ "kind": curve.kind_name(), "points": points, "area": fixed(curve.area()) })
}

fn status_name(s: ItemStatus) -> &'static str {
    match s {
        ItemStatus::Used => "used",
        ItemStatus::SkippedSelf => "skipped_self",
        ItemStatus::SkippedNa => "skipped_na",
        ItemStatus::SkippedUnbounded => "skipped_unbounded",
    }
}

fn trace_json(result: &AssessmentResult) -> Value {
    let t = &result.trace;
    let groups: Vec<Value> = t
        .groups
        .iter()
        .map(|g| {
            let mut m = Map::new();
            m.insert("name".into(), g.name.clone().into());
            m.insert("size".into(), g.size.into());
            m.insert("share".into(), fixed(g.share));
            m.insert("value".into(), g.measure.value.map_or(Value::Null, fixed));
            m.insert("support".into(), g.measure.support.into());
            if let Some(reason) = &g.measure.na_reason {
                m.insert("na_reason".into(), reason.clone().into());
            }
            if let Some(curve) = &g.measure.curve {
                m.insert("curve".into(), curve_json(curve));
            }
            Value::Object(m)
        })
        .collect();
    let pairs: Vec<Value> = t
        .pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let mut m = Map::new();
            m.insert("left".into(), p.left.clone().into());
            m.insert("right".into(), p.right.clone().into());
            m.insert("raw".into(), outcome_json(&p.raw));
            m.insert("value".into(), outcome_json(&p.item.value));
            if let Some(reason) = p.item.value.na_reason() {
                m.insert("na_reason".into(), reason.into());
            }
            m.insert("left_share".into(), fixed(p.item.left_share));
            m.insert("right_share".into(), fixed(p.item.right_share));
            m.insert("self_pair".into(), p.item.self_pair.into());
            m.insert("status".into(), status_name(t.reduction.status[i]).into());
            if p.clamped {
                m.insert("clamped".into(), true.into());
            }
            Value::Object(m)
        })
        .collect();
    let mut reduction = Map::new();
    reduction.insert("kind".into(), t.spec.reduction.name().into());
    reduction.insert(
        "self_pairs".into(),
        match t.self_pairs {
            SelfPairs::Skip => "skip",
            SelfPairs::Keep => "keep",
        }
        .into(),
    );
    reduction.insert(
        "winner".into(),
        t.reduction.winner.map_or(Value::Null, Value::from),
    );
    reduction.insert(
        "total_weight".into(),
        t.reduction.total_weight.map_or(Value::Null, fixed),
    );
    json!({
        "measure": t.spec.to_string(),
        "groups": groups,
        "pairs": pairs,
        "reduction": Value::Object(reduction),
        "warnings": t.warnings.clone(),
    })
}

pub fn to_json(report: &Report) -> Value {
    let m = &report.metadata;
    let mut cells = Map::new();
    let mut traces = Map::new();
    for (row, col, cell) in report.iter_cells() {
        let key = cell_key(row, col);
        let mut entry = Map::new();
        match cell {
            Some(result) => {
                entry.insert("value".into(), outcome_json(&result.value));
                if let Some(reason) = result.value.na_reason() {
                    entry.insert("na_reason".into(), reason.into());
                }
                entry.insert("trace_ref".into(), key.clone().into());
                traces.insert(key.clone(), trace_json(result));
            }
            None => {
                entry.insert("value".into(), Value::Null);
                entry.insert("na_reason".into(), "no such cell in source report".into());
            }
        }
        cells.insert(key, Value::Object(entry));
    }
    json!({
        "metadata": {
            "n": m.n,
            "dataset_columns": m.dataset_columns,
            "groups": m.groups,
            "selector": m.selector,
            "intersectional": m.intersectional,
            "tool_version": m.tool_version,
            "kind": report.kind,
        },
        "rows": report.rows,
        "columns": report.columns,
        "cells": Value::Object(cells),
        "traces": Value::Object(traces),
    })
}

/// Reduce a serialized cell's trace again from the JSON alone.
pub fn rereduce_serialized(doc: &Value, key: &str) -> Result<Outcome> {
    let trace = doc["traces"]
        .get(key)
        .ok_or_else(|| Error::Parameter(format!("no trace `{key}`")))?;
    let kind: Reduction = trace["reduction"]["kind"]
        .as_str()
        .unwrap_or_default()
        .parse()?;
    let self_pairs = match trace["reduction"]["self_pairs"].as_str() {
        Some("keep") => SelfPairs::Keep,
        _ => SelfPairs::Skip,
    };
    let items: Vec<ReductionItem> = trace["pairs"]
        .as_array()
        .map(|pairs| {
            pairs
                .iter()
                .map(|p| ReductionItem {
                    value: outcome_from_json(&p["value"]),
                    left_share: p["left_share"].as_f64().unwrap_or(0.0),
                    right_share: p["right_share"].as_f64().unwrap_or(0.0),
                    self_pair: p["self_pair"].as_bool().unwrap_or(false),
                })
                .collect()
        })
        .unwrap_or_default();
    if items.is_empty() {
        // Not-applicable cells carry no pairs.
        return Ok(outcome_from_json(&doc["cells"][key]["value"]));
    }
    Ok(reduce_items(kind, &items, self_pairs).value)
}

fn plain(o: &Outcome, na: &str) -> String {
    match o {
        Outcome::Finite(v) => format!("{v:.6}"),
        Outcome::Unbounded(Sign::Positive) => "+inf".into(),
        Outcome::Unbounded(Sign::Negative) => "-inf".into(),
        Outcome::Na(_) => na.into(),
    }
}

fn to_csv(report: &Report) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["measure".to_string()];
    header.extend(report.columns.iter().cloned());
    w.write_record(&header).expect("in-memory write");
    for (ri, row) in report.rows.iter().enumerate() {
        let mut record = vec![row.clone()];
        for cell in &report.cells[ri] {
            record.push(cell.as_ref().map_or(String::new(), |c| plain(&c.value, "")));
        }
        w.write_record(&record).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn to_text(report: &Report) -> String {
    let mut table: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["".to_string()];
    header.extend(report.columns.iter().cloned());
    table.push(header);
    for (ri, row) in report.rows.iter().enumerate() {
        let mut line = vec![row.clone()];
        for cell in &report.cells[ri] {
            line.push(cell.as_ref().map_or("-".into(), |c| plain(&c.value, "NA")));
        }
        table.push(line);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|c| {
            table
                .iter()
                .map(|r| r[c].chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    let m = &report.metadata;
    let _ = writeln!(
        out,
        "{} report: n={}, selector={}, {} group(s){}",
        report.kind,
        m.n,
        m.selector,
        m.groups.len(),
        if m.intersectional {
            ", intersectional"
        } else {
            ""
        }
    );
    for (i, row) in table.iter().enumerate() {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
        if i == 0 {
            let _ = writeln!(
                out,
                "{}",
                "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
            );
        }
    }
    out
}

/// Human-readable account of how one cell's value was produced.
pub fn explain(report: &Report, row: &str, column: &str) -> Result<String> {
    let result = report.cell(row, column)?;
    let t = &result.trace;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "cell {row} / {column} = {}",
        plain(&result.value, "NA")
    );
    let _ = writeln!(out, "measure: {}", t.spec);
    if let Some(reason) = result.value.na_reason() {
        let _ = writeln!(out, "NA: {reason}");
    }

    if !t.groups.is_empty() {
        let _ = writeln!(out, "groups:");
        for g in &t.groups {
            let value = match (g.measure.value, &g.measure.na_reason) {
                (Some(v), _) => format!("{v:.6}"),
                (None, Some(reason)) => format!("NA ({reason})"),
                (None, None) => "NA".into(),
            };
            let _ = write!(
                out,
                "  {}: {} = {value} (size {}, support {})",
                g.name, t.spec.base, g.size, g.measure.support
            );
            if let Some(curve) = &g.measure.curve {
                let _ = write!(
                    out,
                    "; {} curve with {} points, area {:.6}",
                    curve.kind_name(),
                    curve.len(),
                    curve.area()
                );
            }
            out.push('\n');
        }
    }

    let weighted = matches!(t.spec.reduction, Reduction::Wmean | Reduction::WmeanRaw);
    if !t.spec.comparison.comparison.is_none() && !t.pairs.is_empty() {
        let _ = writeln!(out, "pairs ({}):", t.spec.comparison.comparison);
        for (i, p) in t.pairs.iter().enumerate() {
            let status = t.reduction.status[i];
            let mut line = format!(
                "  ({}, {}): {}",
                p.left,
                p.right,
                plain(&p.item.value, "NA")
            );
            if p.raw != p.item.value {
                let _ = write!(line, " (raw {})", plain(&p.raw, "NA"));
            }
            if p.clamped {
                line.push_str(" [clamped]");
            }
            match status {
                ItemStatus::Used if weighted => {
                    let _ = write!(line, " weight {:.6}", p.item.weight());
                }
                ItemStatus::Used => {}
                ItemStatus::SkippedSelf => line.push_str(" [self-pair, skipped]"),
                ItemStatus::SkippedNa => {
                    let _ = write!(
                        line,
                        " [NA skipped: {}]",
                        p.item.value.na_reason().unwrap_or("")
                    );
                }
                ItemStatus::SkippedUnbounded => line.push_str(" [unbounded, skipped]"),
            }
            if t.reduction.winner == Some(i) {
                let _ = write!(line, " <- {}", t.spec.reduction);
            }
            let _ = writeln!(out, "{line}");
        }
    }

    let r = &t.reduction;
    let used = r.count(ItemStatus::Used);
    let _ = write!(
        out,
        "reduction: {} over {used} of {} value(s)",
        t.spec.reduction,
        t.pairs.len()
    );
    let skipped: Vec<String> = [
        (ItemStatus::SkippedSelf, "self-pairs"),
        (ItemStatus::SkippedNa, "NA"),
        (ItemStatus::SkippedUnbounded, "unbounded"),
    ]
    .iter()
    .filter_map(|&(s, label)| {
        let c = r.count(s);
        (c > 0).then(|| format!("{c} {label}"))
    })
    .collect();
    if !skipped.is_empty() {
        let _ = write!(out, " (skipped {})", skipped.join(", "));
    }
    if let Some(total) = r.total_weight {
        let _ = write!(out, ", total weight {total:.6}");
    }
    out.push('\n');
    if let Some(w) = t.winner() {
        let _ = writeln!(out, "winner: ({}, {})", w.left, w.right);
    }
    for warning in &t.warnings {
        let _ = writeln!(out, "warning: {warning}");
    }
    Ok(out)
}
