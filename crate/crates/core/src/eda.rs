//! Exploratory summaries, correlations and univariate association tests.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::{value_key, Cells, Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::stats::mann_whitney_u;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub name: String,
    pub kind: FeatureKind,
    pub count: usize,
    pub missing_count: usize,
    pub distinct_count: usize,
    pub mean: Option<f64>,
    /// Population standard deviation.
    pub std: Option<f64>,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdaSummary {
    pub n_instances: usize,
    pub n_features: usize,
    pub n_categorical: usize,
    pub n_quantitative: usize,
    pub class_counts: (usize, usize),
    pub missing_outcomes: usize,
    pub total_missing: usize,
    pub columns: Vec<ColumnSummary>,
    /// Number of features whose missing fraction falls into each tenth of [0, 1];
    /// the last bin includes 1.0.
    pub missingness_histogram: [usize; 10],
}

/// Quantile of sorted data by linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn summarize_column(col: &crate::data::Column) -> ColumnSummary {
    let mut s = ColumnSummary {
        name: col.name.clone(),
        kind: col.kind,
        count: col.len() - col.missing_count(),
        missing_count: col.missing_count(),
        distinct_count: col.distinct_count(),
        mean: None,
        std: None,
        min: None,
        q1: None,
        median: None,
        q3: None,
        max: None,
    };
    if let Cells::Numeric(v) = &col.cells {
        let mut vals: Vec<f64> = v.iter().flatten().copied().collect();
        if !vals.is_empty() {
            vals.sort_by(f64::total_cmp);
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
            s.mean = Some(mean);
            s.std = Some(var.sqrt());
            s.min = vals.first().copied();
            s.max = vals.last().copied();
            s.q1 = Some(quantile(&vals, 0.25));
            s.median = Some(quantile(&vals, 0.5));
            s.q3 = Some(quantile(&vals, 0.75));
        }
    }
    s
}

pub fn summarize(ds: &Dataset) -> EdaSummary {
    let columns: Vec<ColumnSummary> = ds.columns.iter().map(summarize_column).collect();
    let mut hist = [0usize; 10];
    for c in &ds.columns {
        let bin = ((c.missing_fraction() * 10.0).floor() as usize).min(9);
        hist[bin] += 1;
    }
    EdaSummary {
        n_instances: ds.n_instances(),
        n_features: ds.n_features(),
        n_categorical: ds.columns.iter().filter(|c| c.kind == FeatureKind::Categorical).count(),
        n_quantitative: ds.columns.iter().filter(|c| c.kind == FeatureKind::Quantitative).count(),
        class_counts: ds.class_counts(),
        missing_outcomes: ds.outcome.iter().filter(|y| y.is_none()).count(),
        total_missing: columns.iter().map(|c| c.missing_count).sum(),
        columns,
        missingness_histogram: hist,
    }
}

/// Pearson r over rows where both values are present; 0 when either side
/// is constant or fewer than two complete pairs exist.
pub fn pearson_pair(a: &[Option<f64>], b: &[Option<f64>]) -> f64 {
    let pairs: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter_map(|(x, y)| Some(((*x)?, (*y)?)))
        .collect();
    if pairs.len() < 2 {
        return 0.0;
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in &pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0)
}

/// Symmetric matrix of pairwise-complete Pearson correlations, unit diagonal.
pub fn pearson_correlation(ds: &Dataset) -> Result<Vec<Vec<f64>>> {
    let cols: Vec<&[Option<f64>]> = ds
        .columns
        .iter()
        .map(|c| c.numeric_values())
        .collect::<Result<_>>()?;
    let p = cols.len();
    let mut m = vec![vec![0.0; p]; p];
    for i in 0..p {
        m[i][i] = 1.0;
        for j in i + 1..p {
            let r = pearson_pair(cols[i], cols[j]);
            m[i][j] = r;
            m[j][i] = r;
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnivariateResult {
    pub feature: String,
    pub test: String,
    pub statistic: f64,
    pub p_value: f64,
}

/// Pearson chi-square (no continuity correction) on a contingency table of
/// counts; returns (statistic, df, p). Degenerate tables give (0, 0, 1).
pub fn chi_square(table: &[Vec<f64>]) -> (f64, usize, f64) {
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let ncols = table.first().map_or(0, Vec::len);
    let cols: Vec<f64> = (0..ncols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let total: f64 = rows.iter().sum();
    let r_eff = rows.iter().filter(|&&v| v > 0.0).count();
    let c_eff = cols.iter().filter(|&&v| v > 0.0).count();
    if r_eff < 2 || c_eff < 2 {
        return (0.0, 0, 1.0);
    }
    let mut stat = 0.0;
    for (i, r) in table.iter().enumerate() {
        for (j, &obs) in r.iter().enumerate() {
            let exp = rows[i] * cols[j] / total;
            if exp > 0.0 {
                stat += (obs - exp).powi(2) / exp;
            }
        }
    }
    let df = (r_eff - 1) * (c_eff - 1);
    let p = ChiSquared::new(df as f64).expect("positive df").sf(stat);
    (stat, df, p.clamp(0.0, 1.0))
}

/// Chi-square for categorical features and Mann-Whitney U for quantitative
/// ones, sorted by ascending p-value (ties keep column order).
pub fn univariate_tests(ds: &Dataset) -> Result<Vec<UnivariateResult>> {
    let y = ds.labels()?;
    let mut out = Vec::with_capacity(ds.n_features());
    for col in &ds.columns {
        let vals = col.numeric_values()?;
        let present: Vec<(f64, u8)> = vals
            .iter()
            .zip(&y)
            .filter_map(|(v, &c)| v.map(|x| (x, c)))
            .collect();
        let r = match col.kind {
            FeatureKind::Categorical => {
                let mut table: BTreeMap<u64, [f64; 2]> = BTreeMap::new();
                for (x, c) in &present {
                    table.entry(value_key(*x)).or_default()[*c as usize] += 1.0;
                }
                let t: Vec<Vec<f64>> = table.values().map(|r| r.to_vec()).collect();
                let (stat, _, p) = chi_square(&t);
                UnivariateResult {
                    feature: col.name.clone(),
                    test: "chi_square".to_string(),
                    statistic: stat,
                    p_value: p,
                }
            }
            FeatureKind::Quantitative => {
                let a: Vec<f64> = present.iter().filter(|p| p.1 == 0).map(|p| p.0).collect();
                let b: Vec<f64> = present.iter().filter(|p| p.1 == 1).map(|p| p.0).collect();
                let single = col.distinct_count() <= 1;
                let (stat, p) = if a.is_empty() || b.is_empty() || single {
                    (0.0, 1.0)
                } else {
                    let t = mann_whitney_u(&a, &b).map_err(|e| Error::Stats(e.to_string()))?;
                    (t.statistic, t.p_value)
                };
                UnivariateResult {
                    feature: col.name.clone(),
                    test: "mann_whitney_u".to_string(),
                    statistic: stat,
                    p_value: p,
                }
            }
        };
        out.push(r);
    }
    out.sort_by(|a, b| a.p_value.total_cmp(&b.p_value));
    Ok(out)
}
