//! Tabular input, validation and group construction.
//!
//! A [`Dataset`] holds the per-sample columns that base measures read. A
//! [`GroupSet`] (a "fork" of sensitive attribute values) holds the named
//! membership masks that selectors pair up.

use std::collections::{BTreeSet, HashMap};
use std::io::Read;

use crate::error::{Error, Result};
use crate::mask::Mask;

/// Immutable per-sample table. `predictions` is always present; the other
/// columns are optional and measures needing them report NA when absent.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    predictions: Vec<u8>,
    labels: Option<Vec<u8>>,
    scores: Option<Vec<f64>>,
    features: Option<Vec<Vec<f64>>>,
    columns: Vec<String>,
}

impl Dataset {
    pub fn new(predictions: Vec<u8>) -> Result<Self> {
        if predictions.is_empty() {
            return Err(Error::EmptyDataset);
        }
        check_binary("predictions", &predictions)?;
        Ok(Self {
            predictions,
            labels: None,
            scores: None,
            features: None,
            columns: vec!["predictions".into()],
        })
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        self.check_len("labels", labels.len())?;
        check_binary("labels", &labels)?;
        self.labels = Some(labels);
        self.columns.push("labels".into());
        Ok(self)
    }

    pub fn with_scores(mut self, scores: Vec<f64>) -> Result<Self> {
        self.check_len("scores", scores.len())?;
        if let Some(row) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidCell {
                row: row + 1,
                column: "scores".into(),
                value: scores[row].to_string(),
                expected: "a finite number",
            });
        }
        self.scores = Some(scores);
        self.columns.push("scores".into());
        Ok(self)
    }

    pub fn with_features(mut self, features: Vec<Vec<f64>>) -> Result<Self> {
        self.check_len("features", features.len())?;
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::Parameter(
                "feature dimension must be at least 1".into(),
            ));
        }
        for (row, f) in features.iter().enumerate() {
            if f.len() != dim {
                return Err(Error::FeatureDimension {
                    row: row + 1,
                    found: f.len(),
                    expected: dim,
                });
            }
        }
        self.features = Some(features);
        self.columns.push("features".into());
        Ok(self)
    }

    /// Replace the logical column list recorded in report fingerprints.
    pub fn with_column_names(mut self, columns: Vec<String>) -> Self {
        self.columns = columns;
        self
    }

    pub fn len(&self) -> usize {
        self.predictions.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn predictions(&self) -> &[u8] {
        &self.predictions
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn scores(&self) -> Option<&[f64]> {
        self.scores.as_deref()
    }

    pub fn features(&self) -> Option<&[Vec<f64>]> {
        self.features.as_deref()
    }

    pub fn column_names(&self) -> &[String] {
        &self.columns
    }

    pub fn population(&self) -> Mask {
        Mask::full(self.len())
    }

    fn check_len(&self, column: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::LengthMismatch {
                column: column.into(),
                len,
                expected: self.len(),
            });
        }
        Ok(())
    }
}

fn check_binary(column: &str, values: &[u8]) -> Result<()> {
    if let Some(row) = values.iter().position(|&v| v > 1) {
        return Err(Error::InvalidCell {
            row: row + 1,
            column: column.into(),
            value: values[row].to_string(),
            expected: "0 or 1",
        });
    }
    Ok(())
}

/// Which CSV columns feed which dataset field.
#[derive(Debug, Clone, Default)]
pub struct ColumnSpec {
    pub predictions: String,
    pub labels: Option<String>,
    pub scores: Option<String>,
    /// Every header starting with this prefix becomes one feature dimension.
    pub feature_prefix: Option<String>,
    pub sensitive: Vec<String>,
}

/// Raw categorical columns, in the order they were requested.
pub type CategoricalColumns = Vec<(String, Vec<String>)>;

/// Read a headed CSV table. Sensitive columns are returned untouched so the
/// caller decides how to fork them.
pub fn load_table<R: Read>(source: R, spec: &ColumnSpec) -> Result<(Dataset, CategoricalColumns)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    let index_of = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_owned()))
    };

    let pred_idx = index_of(&spec.predictions)?;
    let label_idx = spec.labels.as_deref().map(index_of).transpose()?;
    let score_idx = spec.scores.as_deref().map(index_of).transpose()?;
    let feature_idx: Vec<usize> = match spec.feature_prefix.as_deref() {
        Some(prefix) => {
            let idx: Vec<usize> = headers
                .iter()
                .enumerate()
                .filter(|(_, h)| h.starts_with(prefix))
                .map(|(i, _)| i)
                .collect();
            if idx.is_empty() {
                return Err(Error::MissingColumn(format!("{prefix}*")));
            }
            idx
        }
        None => Vec::new(),
    };
    let sensitive_idx: Vec<usize> = spec
        .sensitive
        .iter()
        .map(|s| index_of(s))
        .collect::<Result<_>>()?;

    let mut predictions = Vec::new();
    let mut labels = Vec::new();
    let mut scores = Vec::new();
    let mut features = Vec::new();
    let mut sensitive: Vec<Vec<String>> = vec![Vec::new(); sensitive_idx.len()];

    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        predictions.push(parse_binary(&record[pred_idx], row, &headers[pred_idx])?);
        if let Some(idx) = label_idx {
            labels.push(parse_binary(&record[idx], row, &headers[idx])?);
        }
        if let Some(idx) = score_idx {
            scores.push(parse_real(&record[idx], row, &headers[idx])?);
        }
        if !feature_idx.is_empty() {
            features.push(
                feature_idx
                    .iter()
                    .map(|&idx| parse_real(&record[idx], row, &headers[idx]))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        for (col, &idx) in sensitive.iter_mut().zip(&sensitive_idx) {
            col.push(record[idx].to_owned());
        }
    }

    if predictions.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let mut columns = vec![spec.predictions.clone()];
    let mut dataset = Dataset::new(predictions)?;
    if let Some(name) = &spec.labels {
        dataset = dataset.with_labels(labels)?;
        columns.push(name.clone());
    }
    if let Some(name) = &spec.scores {
        dataset = dataset.with_scores(scores)?;
        columns.push(name.clone());
    }
    if !feature_idx.is_empty() {
        dataset = dataset.with_features(features)?;
        columns.extend(feature_idx.iter().map(|&i| headers[i].clone()));
    }
    columns.extend(spec.sensitive.iter().cloned());

    let categorical = spec.sensitive.iter().cloned().zip(sensitive).collect();
    Ok((dataset.with_column_names(columns), categorical))
}

fn parse_binary(cell: &str, row: usize, column: &str) -> Result<u8> {
    match cell {
        "0" | "0.0" => Ok(0),
        "1" | "1.0" => Ok(1),
        _ => Err(Error::InvalidCell {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
            expected: "0 or 1",
        }),
    }
}

fn parse_real(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::InvalidCell {
            row,
            column: column.to_owned(),
            value: cell.to_owned(),
            expected: "a finite number",
        }),
    }
}

/// One named group. `components` lists the original group names whose
/// intersection produced it; a plain group has exactly one component.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    name: String,
    mask: Mask,
    components: Vec<String>,
}

impl Group {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn is_intersection(&self) -> bool {
        self.components.len() > 1
    }
}

/// Ordered collection of nonempty named groups over a population of `n` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupSet {
    groups: Vec<Group>,
    population_size: usize,
}

impl GroupSet {
    /// A set with no groups; selectors fall back to comparing individuals.
    pub fn empty(population_size: usize) -> Self {
        Self {
            groups: Vec::new(),
            population_size,
        }
    }

    /// Build from named binary masks, keeping the given order.
    pub fn from_masks<I, S>(population_size: usize, masks: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<bool>)>,
        S: Into<String>,
    {
        let mut set = Self::empty(population_size);
        for (name, bits) in masks {
            let name = name.into();
            if bits.len() != population_size {
                return Err(Error::LengthMismatch {
                    column: name,
                    len: bits.len(),
                    expected: population_size,
                });
            }
            set.push(Group {
                components: vec![name.clone()],
                name,
                mask: Mask::from_bools(&bits),
            })?;
        }
        Ok(set)
    }

    /// One group per distinct value per column, named `column=value`, in
    /// order of first appearance.
    pub fn from_categories(columns: &[(String, Vec<String>)]) -> Result<Self> {
        let n = columns.first().map_or(0, |(_, values)| values.len());
        let mut set = Self::empty(n);
        for (column, values) in columns {
            if values.len() != n {
                return Err(Error::LengthMismatch {
                    column: column.clone(),
                    len: values.len(),
                    expected: n,
                });
            }
            let mut order: Vec<&str> = Vec::new();
            let mut masks: HashMap<&str, Mask> = HashMap::new();
            for (row, value) in values.iter().enumerate() {
                masks
                    .entry(value.as_str())
                    .or_insert_with(|| {
                        order.push(value.as_str());
                        Mask::empty(n)
                    })
                    .set(row, true);
            }
            for value in order {
                let name = format!("{column}={value}");
                set.push(Group {
                    components: vec![name.clone()],
                    name,
                    mask: masks.remove(value).expect("value recorded"),
                })?;
            }
        }
        Ok(set)
    }

    fn push(&mut self, group: Group) -> Result<()> {
        if self.groups.iter().any(|g| g.name == group.name) {
            return Err(Error::DuplicateGroup(group.name));
        }
        if group.mask.none() {
            return Err(Error::EmptyGroup(group.name));
        }
        self.groups.push(group);
        Ok(())
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    pub fn population_size(&self) -> usize {
        self.population_size
    }

    pub fn names(&self) -> Vec<String> {
        self.groups.iter().map(|g| g.name.clone()).collect()
    }

    /// Every distinct nonempty intersection of a nonempty subset of groups.
    ///
    /// Single groups count as one-element intersections, so the originals
    /// survive. Groups with equal masks are merged; the surviving name is the
    /// one built from the fewest components, ties broken lexicographically.
    /// Originals come first in input order, then intersections by component
    /// count and name.
    pub fn intersectional(&self) -> GroupSet {
        // Flatten to base components so repeated application is stable.
        let mut bases: Vec<(String, Mask)> = Vec::new();
        for g in &self.groups {
            if !g.is_intersection() && !bases.iter().any(|(name, _)| name == &g.name) {
                bases.push((g.name.clone(), g.mask.clone()));
            }
        }

        let mut seen: HashMap<Mask, usize> = HashMap::new();
        let mut out: Vec<Group> = Vec::new();
        let record =
            |out: &mut Vec<Group>, seen: &mut HashMap<Mask, usize>, group: Group| match seen
                .get(&group.mask)
            {
                Some(&at) => {
                    let existing = &out[at];
                    if group.components.len() == existing.components.len()
                        && group.name < existing.name
                    {
                        out[at] = group;
                        true
                    } else {
                        false
                    }
                }
                None => {
                    seen.insert(group.mask.clone(), out.len());
                    out.push(group);
                    true
                }
            };

        // Already-intersected inputs are kept as-is (idempotence).
        for g in &self.groups {
            record(&mut out, &mut seen, g.clone());
        }

        let mut frontier: Vec<usize> = (0..out.len()).collect();
        while !frontier.is_empty() {
            let mut level: Vec<Group> = Vec::new();
            for &at in &frontier {
                let current = out[at].clone();
                for (base_name, base_mask) in &bases {
                    if current.components.contains(base_name) {
                        continue;
                    }
                    let mask = current.mask.and(base_mask);
                    if mask.none() || mask == current.mask {
                        continue;
                    }
                    let components: Vec<String> = current
                        .components
                        .iter()
                        .cloned()
                        .chain(std::iter::once(base_name.clone()))
                        .collect::<BTreeSet<_>>()
                        .into_iter()
                        .collect();
                    level.push(Group {
                        name: components.join("&"),
                        mask,
                        components,
                    });
                }
            }
            level.sort_by(|a, b| (a.components.len(), &a.name).cmp(&(b.components.len(), &b.name)));
            frontier.clear();
            for group in level {
                let mask = group.mask.clone();
                let was_new = !seen.contains_key(&mask);
                if record(&mut out, &mut seen, group) && was_new {
                    frontier.push(seen[&mask]);
                }
            }
        }

        let originals = self.groups.len();
        let mut tail = out.split_off(originals.min(out.len()));
        tail.sort_by(|a, b| (a.components.len(), &a.name).cmp(&(b.components.len(), &b.name)));
        out.extend(tail);
        GroupSet {
            groups: out,
            population_size: self.population_size,
        }
    }

    /// Only the groups formed by intersecting two or more originals.
    pub fn strict_intersections(&self) -> GroupSet {
        GroupSet {
            groups: self
                .groups
                .iter()
                .filter(|g| g.is_intersection())
                .cloned()
                .collect(),
            population_size: self.population_size,
        }
    }
}
