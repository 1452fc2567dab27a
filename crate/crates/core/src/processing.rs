//! Cleaning and feature engineering with a ledger of every count change.
//!
//! [`process`] runs the six steps in order and returns a [`ProcessingSchema`]
//! that [`ProcessingSchema::replay`] applies to new data of the same layout.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{format_value, value_key, Cells, Column, ColumnOrigin, Config, Dataset, FeatureKind, FeatureSpec};
use crate::eda::pearson_pair;
use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Slack on the correlation threshold so exact pairs survive rounding.
const CORRELATION_EPS: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: String,
    pub description: String,
    pub instances_before: usize,
    pub instances_after: usize,
    pub features_before: usize,
    pub features_after: usize,
    pub removed_features: Vec<String>,
    pub added_features: Vec<String>,
    pub removed_instances: Vec<String>,
}

impl LogEntry {
    fn between(step: &str, description: String, before: &Dataset, after: &Dataset) -> LogEntry {
        let kept_ids: BTreeSet<&str> = after.instance_ids.iter().map(String::as_str).collect();
        let before_cols: BTreeSet<&str> = before.columns.iter().map(|c| c.name.as_str()).collect();
        let after_cols: BTreeSet<&str> = after.columns.iter().map(|c| c.name.as_str()).collect();
        LogEntry {
            step: step.to_string(),
            description,
            instances_before: before.n_instances(),
            instances_after: after.n_instances(),
            features_before: before.n_features(),
            features_after: after.n_features(),
            removed_features: before
                .columns
                .iter()
                .filter(|c| !after_cols.contains(c.name.as_str()))
                .map(|c| c.name.clone())
                .collect(),
            added_features: after
                .columns
                .iter()
                .filter(|c| !before_cols.contains(c.name.as_str()))
                .map(|c| c.name.clone())
                .collect(),
            removed_instances: before
                .instance_ids
                .iter()
                .filter(|id| !kept_ids.contains(id.as_str()))
                .cloned()
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProcessingLog {
    pub entries: Vec<LogEntry>,
}

impl ProcessingLog {
    pub fn entry(&self, step: &str) -> Option<&LogEntry> {
        self.entries.iter().find(|e| e.step == step)
    }

    /// True when each entry starts from the previous entry's counts.
    pub fn is_chained(&self) -> bool {
        self.entries.windows(2).all(|w| {
            w[0].instances_after == w[1].instances_before && w[0].features_after == w[1].features_before
        })
    }

    /// One row per step; name lists are `;`-joined.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "step",
            "description",
            "instances_before",
            "instances_after",
            "features_before",
            "features_after",
            "removed_features",
            "added_features",
            "removed_instances",
        ])?;
        for e in &self.entries {
            w.write_record([
                e.step.clone(),
                e.description.clone(),
                e.instances_before.to_string(),
                e.instances_after.to_string(),
                e.features_before.to_string(),
                e.features_after.to_string(),
                e.removed_features.join(";"),
                e.added_features.join(";"),
                e.removed_instances.join(";"),
            ])?;
        }
        w.flush().map_err(|e| Error::io("processing log", e))?;
        Ok(())
    }
}

pub const STEP_MISSING_OUTCOME: &str = "remove_missing_outcome";
pub const STEP_IGNORED: &str = "remove_ignored_features";
pub const STEP_MISSINGNESS: &str = "add_missingness_features";
pub const STEP_INVARIANT_SPARSE: &str = "remove_invariant_and_sparse";
pub const STEP_ONE_HOT: &str = "one_hot_encode";
pub const STEP_CORRELATED: &str = "remove_correlated";

pub fn missingness_name(parent: &str) -> String {
    format!("miss_{parent}")
}

pub fn one_hot_name(parent: &str, level: f64) -> String {
    format!("{parent}={}", format_value(level))
}

pub fn drop_missing_outcome(ds: &Dataset) -> (Dataset, LogEntry) {
    let rows: Vec<usize> = (0..ds.n_instances()).filter(|&r| ds.outcome[r].is_some()).collect();
    let out = ds.select_rows(&rows);
    let entry = LogEntry::between(
        STEP_MISSING_OUTCOME,
        "instances without an outcome label".to_string(),
        ds,
        &out,
    );
    (out, entry)
}

pub fn drop_ignored_features(ds: &Dataset, ignore: &[String]) -> Result<(Dataset, LogEntry)> {
    let out = ds.drop_columns(ignore)?;
    let entry = LogEntry::between(STEP_IGNORED, "features listed for exclusion".to_string(), ds, &out);
    Ok((out, entry))
}

/// Adds `miss_<name>` for every original feature whose missing fraction
/// exceeds `threshold`. A parent with no observed values is skipped: its
/// indicator would be constant.
pub fn engineer_missingness_features(ds: &Dataset, threshold: f64) -> (Dataset, LogEntry, Vec<String>) {
    let parents: Vec<String> = ds
        .columns
        .iter()
        .filter(|c| c.origin == ColumnOrigin::Original)
        .filter(|c| {
            let f = c.missing_fraction();
            f > threshold && c.missing_count() < c.len()
        })
        .map(|c| c.name.clone())
        .collect();
    let out = add_indicators(ds, &parents);
    let entry = LogEntry::between(
        STEP_MISSINGNESS,
        format!("missingness indicators for features with missing fraction > {threshold}"),
        ds,
        &out,
    );
    (out, entry, parents)
}

fn add_indicators(ds: &Dataset, parents: &[String]) -> Dataset {
    let mut out = ds.clone();
    for p in parents {
        let col = ds.column(p).expect("parent column exists");
        let values = (0..col.len())
            .map(|r| Some(if col.cells.is_missing(r) { 1.0 } else { 0.0 }))
            .collect();
        out.columns.push(
            Column::numeric(missingness_name(p), FeatureKind::Categorical, values)
                .with_origin(ColumnOrigin::MissingnessIndicator { parent: p.clone() }),
        );
    }
    out
}

/// Drops invariant columns, then columns with missing fraction above
/// `threshold`, then instances with missing fraction above `threshold`
/// over the surviving columns.
pub fn drop_invariant_and_sparse(ds: &Dataset, threshold: f64) -> (Dataset, LogEntry) {
    let invariant: Vec<String> = ds
        .columns
        .iter()
        .filter(|c| c.distinct_count() <= 1)
        .map(|c| c.name.clone())
        .collect();
    let step_a = ds.drop_columns(&invariant).expect("names come from the dataset");
    let sparse: Vec<String> = step_a
        .columns
        .iter()
        .filter(|c| c.missing_fraction() > threshold)
        .map(|c| c.name.clone())
        .collect();
    let step_b = step_a.drop_columns(&sparse).expect("names come from the dataset");
    let out = drop_sparse_rows(&step_b, threshold);
    let entry = LogEntry::between(
        STEP_INVARIANT_SPARSE,
        format!(
            "{} invariant features, {} features and then instances with missing fraction > {threshold}",
            invariant.len(),
            sparse.len()
        ),
        ds,
        &out,
    );
    (out, entry)
}

fn drop_sparse_rows(ds: &Dataset, threshold: f64) -> Dataset {
    let rows: Vec<usize> = (0..ds.n_instances())
        .filter(|&r| ds.row_missing_fraction(r) <= threshold)
        .collect();
    ds.select_rows(&rows)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneHotSpec {
    pub parent: String,
    pub levels: Vec<f64>,
}

fn one_hot_columns(col: &Column, levels: &[f64]) -> Result<Vec<Column>> {
    let values = col.numeric_values()?;
    Ok(levels
        .iter()
        .map(|&level| {
            let key = value_key(level);
            let child = values
                .iter()
                .map(|v| v.map(|x| if value_key(x) == key { 1.0 } else { 0.0 }))
                .collect();
            Column::numeric(one_hot_name(&col.name, level), FeatureKind::Categorical, child).with_origin(
                ColumnOrigin::OneHot {
                    parent: col.name.clone(),
                    level: format_value(level),
                },
            )
        })
        .collect())
}

/// Replaces categorical columns with more than two levels by one binary
/// child per level, placed where the parent was.
pub fn one_hot_encode(ds: &Dataset) -> Result<(Dataset, LogEntry, Vec<OneHotSpec>)> {
    let mut specs = Vec::new();
    let mut columns = Vec::with_capacity(ds.n_features());
    for col in &ds.columns {
        if col.kind == FeatureKind::Categorical && col.distinct_count() > 2 {
            let levels = col.levels();
            columns.extend(one_hot_columns(col, &levels)?);
            specs.push(OneHotSpec {
                parent: col.name.clone(),
                levels,
            });
        } else {
            columns.push(col.clone());
        }
    }
    let out = Dataset {
        columns,
        ..ds.clone()
    };
    out.validate()?;
    let entry = LogEntry::between(
        STEP_ONE_HOT,
        format!("{} categorical features with more than two levels", specs.len()),
        ds,
        &out,
    );
    Ok((out, entry, specs))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRemoval {
    pub removed: String,
    pub kept: String,
    pub r: f64,
}

/// One pass over column pairs in order; for each pair with |r| at or above
/// `threshold` whose members both survive, a coin flip picks the one to drop.
pub fn drop_correlated<R: Rng>(
    ds: &Dataset,
    threshold: f64,
    rng: &mut R,
) -> Result<(Dataset, LogEntry, Vec<CorrelationRemoval>)> {
    let cols: Vec<&[Option<f64>]> = ds
        .columns
        .iter()
        .map(|c| c.numeric_values())
        .collect::<Result<_>>()?;
    let p = cols.len();
    let mut removed = vec![false; p];
    let mut removals = Vec::new();
    for i in 0..p {
        for j in i + 1..p {
            if removed[i] {
                break;
            }
            if removed[j] {
                continue;
            }
            let r = pearson_pair(cols[i], cols[j]);
            if r.abs() >= threshold - CORRELATION_EPS {
                let (drop, keep) = if rng.random_bool(0.5) { (i, j) } else { (j, i) };
                removed[drop] = true;
                removals.push(CorrelationRemoval {
                    removed: ds.columns[drop].name.clone(),
                    kept: ds.columns[keep].name.clone(),
                    r,
                });
            }
        }
    }
    let names: Vec<String> = removals.iter().map(|c| c.removed.clone()).collect();
    let out = ds.drop_columns(&names)?;
    let entry = LogEntry::between(
        STEP_CORRELATED,
        format!("one feature of each pair with |r| >= {threshold}"),
        ds,
        &out,
    );
    Ok((out, entry, removals))
}

/// Everything needed to push new data through the same processing.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcessingSchema {
    pub version: u32,
    /// Typed columns entering processing, in order.
    pub input_features: Vec<FeatureSpec>,
    pub ignored_features: Vec<String>,
    pub missingness_parents: Vec<String>,
    /// Invariant and sparse columns removed by cleaning.
    pub dropped_features: Vec<String>,
    pub cleaning_missingness: f64,
    /// Observed levels of categorical columns that were not one-hot encoded.
    pub categorical_levels: BTreeMap<String, Vec<f64>>,
    pub one_hot: Vec<OneHotSpec>,
    pub correlation_removals: Vec<CorrelationRemoval>,
    pub output_features: Vec<FeatureSpec>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Processed {
    pub data: Dataset,
    pub log: ProcessingLog,
    pub schema: ProcessingSchema,
}

/// Runs the six processing steps on typed, numerically encoded data.
pub fn process<R: Rng>(ds: &Dataset, cfg: &Config, rng: &mut R) -> Result<Processed> {
    if let Some(c) = ds.columns.iter().find(|c| c.is_text()) {
        return Err(Error::data(format!("column '{}' still holds text; encode labels first", c.name)));
    }
    let input_features = ds.feature_specs();
    let mut log = ProcessingLog::default();

    let (d1, e) = drop_missing_outcome(ds);
    log.entries.push(e);
    let (d2, e) = drop_ignored_features(&d1, &cfg.ignore_features)?;
    log.entries.push(e);
    let (d3, e, parents) = engineer_missingness_features(&d2, cfg.featureeng_missingness);
    log.entries.push(e);
    let (d4, e) = drop_invariant_and_sparse(&d3, cfg.cleaning_missingness);
    let dropped_features = e.removed_features.clone();
    log.entries.push(e);
    let (d5, e, one_hot) = one_hot_encode(&d4)?;
    log.entries.push(e);
    let (d6, e, correlation_removals) = drop_correlated(&d5, cfg.correlation_removal_threshold, rng)?;
    log.entries.push(e);

    let encoded: BTreeSet<&str> = one_hot.iter().map(|s| s.parent.as_str()).collect();
    let categorical_levels = d4
        .columns
        .iter()
        .filter(|c| c.kind == FeatureKind::Categorical && !encoded.contains(c.name.as_str()))
        .map(|c| (c.name.clone(), c.levels()))
        .collect();

    let schema = ProcessingSchema {
        version: SCHEMA_VERSION,
        input_features,
        ignored_features: cfg.ignore_features.clone(),
        missingness_parents: parents,
        dropped_features,
        cleaning_missingness: cfg.cleaning_missingness,
        categorical_levels,
        one_hot,
        correlation_removals,
        output_features: d6.feature_specs(),
    };
    Ok(Processed {
        data: d6,
        log,
        schema,
    })
}

impl ProcessingSchema {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<ProcessingSchema> {
        let s: ProcessingSchema = serde_json::from_str(text)?;
        if s.version != SCHEMA_VERSION {
            return Err(Error::data(format!("unsupported processing schema version {}", s.version)));
        }
        Ok(s)
    }

    /// Applies the recorded processing to numerically encoded data holding at
    /// least every input feature. Extra columns are ignored.
    ///
    /// Instances are removed for a missing outcome and for missingness above
    /// the cleaning threshold, checked at the same stage as in training. A
    /// categorical value outside the training levels becomes missing for a
    /// binary feature and all zeros across a one-hot group.
    pub fn replay(&self, ds: &Dataset) -> Result<(Dataset, ProcessingLog)> {
        for f in &self.input_features {
            if ds.column(&f.name).is_none() {
                return Err(Error::data(format!("required feature '{}' is absent", f.name)));
            }
        }
        let typed = ds.apply_specs(&self.input_features)?;
        if let Some(c) = typed.columns.iter().find(|c| c.is_text()) {
            return Err(Error::data(format!("column '{}' still holds text; encode labels first", c.name)));
        }
        let mut log = ProcessingLog::default();
        let (d1, e) = drop_missing_outcome(&typed);
        log.entries.push(e);
        let (d2, e) = drop_ignored_features(&d1, &self.ignored_features)?;
        log.entries.push(e);

        let d3 = add_indicators(&d2, &self.missingness_parents);
        log.entries.push(LogEntry::between(
            STEP_MISSINGNESS,
            "recorded missingness indicators".to_string(),
            &d2,
            &d3,
        ));

        let d4 = drop_sparse_rows(&d3.drop_columns(&self.dropped_features)?, self.cleaning_missingness);
        log.entries.push(LogEntry::between(
            STEP_INVARIANT_SPARSE,
            "recorded feature removals, then sparse instances".to_string(),
            &d3,
            &d4,
        ));

        let mut d4 = d4;
        for col in &mut d4.columns {
            let Some(levels) = self.categorical_levels.get(&col.name) else { continue };
            let keys: BTreeSet<u64> = levels.iter().map(|&l| value_key(l)).collect();
            if let Cells::Numeric(v) = &mut col.cells {
                for x in v.iter_mut() {
                    if x.is_some_and(|val| !keys.contains(&value_key(val))) {
                        *x = None;
                    }
                }
            }
        }

        let specs: BTreeMap<&str, &OneHotSpec> = self.one_hot.iter().map(|s| (s.parent.as_str(), s)).collect();
        let mut columns = Vec::with_capacity(d4.n_features());
        for col in &d4.columns {
            match specs.get(col.name.as_str()) {
                Some(spec) => columns.extend(one_hot_columns(col, &spec.levels)?),
                None => columns.push(col.clone()),
            }
        }
        let d5 = Dataset {
            columns,
            ..d4.clone()
        };
        log.entries.push(LogEntry::between(
            STEP_ONE_HOT,
            "recorded one-hot levels".to_string(),
            &d4,
            &d5,
        ));

        let removed: Vec<String> = self.correlation_removals.iter().map(|c| c.removed.clone()).collect();
        let d6 = d5.drop_columns(&removed)?;
        log.entries.push(LogEntry::between(
            STEP_CORRELATED,
            "recorded correlation removals".to_string(),
            &d5,
            &d6,
        ));
        let out = d6.apply_specs(&self.output_features)?;
        if out.n_features() != d6.n_features() {
            return Err(Error::data("replayed features do not match the recorded output"));
        }
        Ok((out, log))
    }
}
