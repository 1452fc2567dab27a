//! Tabular data model and ingestion.

mod config;
mod encode;
mod infer;
mod load;

use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{Config, PartitionMethod, DEFAULT_CONFIG_KEYS};
pub use encode::{encode_text_labels, LabelMap};
pub(crate) use load::format_value;
pub use infer::infer_feature_types;
pub use load::{is_missing_marker, load_delimited, read_delimited, write_delimited, DelimitedLayout};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureKind {
    Categorical,
    Quantitative,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Categorical => "categorical",
            FeatureKind::Quantitative => "quantitative",
        }
    }
}

/// Where a column came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnOrigin {
    Original,
    MissingnessIndicator { parent: String },
    OneHot { parent: String, level: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cells {
    Numeric(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

impl Cells {
    pub fn len(&self) -> usize {
        match self {
            Cells::Numeric(v) => v.len(),
            Cells::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_missing(&self, row: usize) -> bool {
        match self {
            Cells::Numeric(v) => v[row].is_none(),
            Cells::Text(v) => v[row].is_none(),
        }
    }

    fn select(&self, rows: &[usize]) -> Cells {
        match self {
            Cells::Numeric(v) => Cells::Numeric(rows.iter().map(|&r| v[r]).collect()),
            Cells::Text(v) => Cells::Text(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }
}

/// Bit pattern used to compare floats for equality (`-0.0` folds onto `0.0`).
pub(crate) fn value_key(v: f64) -> u64 {
    if v == 0.0 {
        0f64.to_bits()
    } else {
        v.to_bits()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Column {
    pub name: String,
    pub kind: FeatureKind,
    pub origin: ColumnOrigin,
    pub cells: Cells,
}

impl Column {
    pub fn numeric(name: impl Into<String>, kind: FeatureKind, values: Vec<Option<f64>>) -> Self {
        Column {
            name: name.into(),
            kind,
            origin: ColumnOrigin::Original,
            cells: Cells::Numeric(values),
        }
    }

    pub fn text(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Column {
            name: name.into(),
            kind: FeatureKind::Categorical,
            origin: ColumnOrigin::Original,
            cells: Cells::Text(values),
        }
    }

    pub fn with_origin(mut self, origin: ColumnOrigin) -> Self {
        self.origin = origin;
        self
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Numeric values, or `None` when the column still holds text.
    pub fn values(&self) -> Option<&[Option<f64>]> {
        match &self.cells {
            Cells::Numeric(v) => Some(v),
            Cells::Text(_) => None,
        }
    }

    pub(crate) fn numeric_values(&self) -> Result<&[Option<f64>]> {
        self.values().ok_or_else(|| {
            Error::data(format!(
                "column '{}' still holds text values; encode labels first",
                self.name
            ))
        })
    }

    pub fn is_text(&self) -> bool {
        matches!(self.cells, Cells::Text(_))
    }

    pub fn missing_count(&self) -> usize {
        (0..self.len()).filter(|&r| self.cells.is_missing(r)).count()
    }

    pub fn missing_fraction(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.missing_count() as f64 / self.len() as f64
        }
    }

    /// Number of distinct non-missing values.
    pub fn distinct_count(&self) -> usize {
        match &self.cells {
            Cells::Numeric(v) => v
                .iter()
                .flatten()
                .map(|&x| value_key(x))
                .collect::<HashSet<_>>()
                .len(),
            Cells::Text(v) => v.iter().flatten().collect::<HashSet<_>>().len(),
        }
    }

    /// Sorted distinct non-missing numeric values.
    pub fn levels(&self) -> Vec<f64> {
        let mut seen = HashSet::new();
        let mut out: Vec<f64> = self
            .values()
            .unwrap_or(&[])
            .iter()
            .flatten()
            .copied()
            .filter(|&x| seen.insert(value_key(x)))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }
}

/// A column-typed table with a binary outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub outcome_name: String,
    pub instance_ids: Vec<String>,
    pub outcome: Vec<Option<u8>>,
    pub columns: Vec<Column>,
    pub group_labels: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        outcome_name: impl Into<String>,
        instance_ids: Vec<String>,
        outcome: Vec<Option<u8>>,
        columns: Vec<Column>,
        group_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let ds = Dataset {
            outcome_name: outcome_name.into(),
            instance_ids,
            outcome,
            columns,
            group_labels,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.instance_ids.len();
        if self.outcome.len() != n {
            return Err(Error::data(format!(
                "outcome has {} values for {} instances",
                self.outcome.len(),
                n
            )));
        }
        if let Some(bad) = self.outcome.iter().flatten().find(|&&y| y > 1) {
            return Err(Error::NonBinaryOutcome {
                column: self.outcome_name.clone(),
                value: bad.to_string(),
            });
        }
        let mut names = HashSet::new();
        for col in &self.columns {
            if col.len() != n {
                return Err(Error::data(format!(
                    "column '{}' has {} values for {} instances",
                    col.name,
                    col.len(),
                    n
                )));
            }
            if !names.insert(col.name.as_str()) {
                return Err(Error::data(format!("duplicate column name '{}'", col.name)));
            }
        }
        if let Some(g) = &self.group_labels {
            if g.len() != n {
                return Err(Error::data("group labels do not match instance count"));
            }
        }
        Ok(())
    }

    pub fn n_instances(&self) -> usize {
        self.instance_ids.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Outcome labels, failing if any are missing.
    pub fn labels(&self) -> Result<Vec<u8>> {
        self.outcome
            .iter()
            .enumerate()
            .map(|(i, y)| {
                y.ok_or_else(|| {
                    Error::data(format!("instance '{}' has no outcome", self.instance_ids[i]))
                })
            })
            .collect()
    }

    /// Counts of (class 0, class 1) over non-missing outcomes.
    pub fn class_counts(&self) -> (usize, usize) {
        let ones = self.outcome.iter().filter(|y| **y == Some(1)).count();
        let zeros = self.outcome.iter().filter(|y| **y == Some(0)).count();
        (zeros, ones)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Dataset {
        Dataset {
            outcome_name: self.outcome_name.clone(),
            instance_ids: rows.iter().map(|&r| self.instance_ids[r].clone()).collect(),
            outcome: rows.iter().map(|&r| self.outcome[r]).collect(),
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    kind: c.kind,
                    origin: c.origin.clone(),
                    cells: c.cells.select(rows),
                })
                .collect(),
            group_labels: self
                .group_labels
                .as_ref()
                .map(|g| rows.iter().map(|&r| g[r].clone()).collect()),
        }
    }

    /// Keep only the named columns, in the order given.
    pub fn select_columns(&self, names: &[String]) -> Result<Dataset> {
        let index: HashMap<&str, usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(i, c)| (c.name.as_str(), i))
            .collect();
        let columns = names
            .iter()
            .map(|n| {
                index
                    .get(n.as_str())
                    .map(|&i| self.columns[i].clone())
                    .ok_or_else(|| Error::UnknownFeature(n.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Dataset {
            columns,
            ..self.without_columns()
        })
    }

    /// Drop the named columns; unknown names are an error.
    pub fn drop_columns(&self, names: &[String]) -> Result<Dataset> {
        let drop: BTreeSet<&str> = names.iter().map(String::as_str).collect();
        for n in &drop {
            if self.column(n).is_none() {
                return Err(Error::UnknownFeature(n.to_string()));
            }
        }
        Ok(Dataset {
            columns: self
                .columns
                .iter()
                .filter(|c| !drop.contains(c.name.as_str()))
                .cloned()
                .collect(),
            ..self.without_columns()
        })
    }

    fn without_columns(&self) -> Dataset {
        Dataset {
            outcome_name: self.outcome_name.clone(),
            instance_ids: self.instance_ids.clone(),
            outcome: self.outcome.clone(),
            columns: Vec::new(),
            group_labels: self.group_labels.clone(),
        }
    }

    /// Fraction of missing cells in a row over all columns.
    pub fn row_missing_fraction(&self, row: usize) -> f64 {
        if self.columns.is_empty() {
            return 0.0;
        }
        let missing = self
            .columns
            .iter()
            .filter(|c| c.cells.is_missing(row))
            .count();
        missing as f64 / self.columns.len() as f64
    }

    pub fn has_missing(&self) -> bool {
        self.columns.iter().any(|c| c.missing_count() > 0)
    }

    /// Column schema (name, kind, origin) used to restore typed data read back from disk.
    pub fn feature_specs(&self) -> Vec<FeatureSpec> {
        self.columns
            .iter()
            .map(|c| FeatureSpec {
                name: c.name.clone(),
                kind: c.kind,
                origin: c.origin.clone(),
            })
            .collect()
    }

    /// Re-attach kinds and origins from a saved schema; column order follows `specs`.
    pub fn apply_specs(&self, specs: &[FeatureSpec]) -> Result<Dataset> {
        let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
        let mut ds = self.select_columns(&names)?;
        for (col, spec) in ds.columns.iter_mut().zip(specs) {
            col.kind = spec.kind;
            col.origin = spec.origin.clone();
        }
        Ok(ds)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub kind: FeatureKind,
    pub origin: ColumnOrigin,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Dataset {
        Dataset::new(
            "class",
            vec!["a".into(), "b".into(), "c".into()],
            vec![Some(0), Some(1), None],
            vec![
                Column::numeric("x", FeatureKind::Quantitative, vec![Some(1.0), None, Some(3.0)]),
                Column::numeric("y", FeatureKind::Categorical, vec![Some(0.0), Some(0.0), Some(-0.0)]),
            ],
            None,
        )
        .unwrap()
    }

    #[test]
    fn counts_and_distinct() {
        let ds = tiny();
        assert_eq!(ds.n_instances(), 3);
        assert_eq!(ds.class_counts(), (1, 1));
        assert_eq!(ds.columns[0].missing_count(), 1);
        assert_eq!(ds.columns[1].distinct_count(), 1);
    }

    #[test]
    fn rejects_mismatched_lengths_and_duplicates() {
        let bad = Dataset::new(
            "class",
            vec!["a".into()],
            vec![Some(0)],
            vec![Column::numeric("x", FeatureKind::Quantitative, vec![])],
            None,
        );
        assert!(bad.is_err());
        let dup = Dataset::new(
            "class",
            vec!["a".into()],
            vec![Some(0)],
            vec![
                Column::numeric("x", FeatureKind::Quantitative, vec![Some(1.0)]),
                Column::numeric("x", FeatureKind::Quantitative, vec![Some(1.0)]),
            ],
            None,
        );
        assert!(dup.is_err());
    }

    #[test]
    fn select_and_drop() {
        let ds = tiny();
        let sub = ds.select_rows(&[2, 0]);
        assert_eq!(sub.instance_ids, vec!["c", "a"]);
        assert_eq!(sub.columns[0].values().unwrap(), &[Some(3.0), Some(1.0)]);
        let dropped = ds.drop_columns(&["x".into()]).unwrap();
        assert_eq!(dropped.feature_names(), vec!["y"]);
        assert!(ds.drop_columns(&["nope".into()]).is_err());
    }
}
