//! Imputation and scaling fitted on one training partition and replayed elsewhere.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::{value_key, Cells, Dataset, FeatureKind};
use crate::error::{Error, Result};

pub const TRANSFORM_VERSION: u32 = 1;
pub const MAX_IMPUTE_ROUNDS: usize = 10;
pub const IMPUTE_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOptions {
    pub impute_data: bool,
    pub scale_data: bool,
    pub multi_impute: bool,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            impute_data: true,
            scale_data: true,
            multi_impute: true,
        }
    }
}

/// Linear model predicting one column from every other column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImputeModel {
    pub column: usize,
    pub intercept: f64,
    /// One weight per feature; the target column's own weight is 0.
    pub weights: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub version: u32,
    pub fold: Option<usize>,
    pub options: TransformOptions,
    pub features: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    /// Mode for categorical columns, median for quantitative ones.
    pub fill: Vec<f64>,
    /// Quantitative columns that had missing training values, in column order.
    pub regressed: Vec<usize>,
    /// Every imputation round's models, in the order they were fitted.
    pub rounds: Vec<Vec<ImputeModel>>,
    /// Largest absolute imputation change in each round.
    pub round_changes: Vec<f64>,
    pub means: Vec<f64>,
    /// Population standard deviation; 1 for constant columns.
    pub scales: Vec<f64>,
}

type Matrix = Vec<Vec<Option<f64>>>;

fn columns_of(ds: &Dataset) -> Result<Matrix> {
    ds.columns
        .iter()
        .map(|c| c.numeric_values().map(<[Option<f64>]>::to_vec))
        .collect()
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Most frequent value; ties go to the smallest.
fn mode(values: &[f64]) -> f64 {
    let mut counts: BTreeMap<u64, (f64, usize)> = BTreeMap::new();
    for &v in values {
        counts.entry(value_key(v)).or_insert((v, 0)).1 += 1;
    }
    let mut best: Option<(f64, usize)> = None;
    for &(v, c) in counts.values() {
        best = match best {
            Some((bv, bc)) if bc > c || (bc == c && bv <= v) => Some((bv, bc)),
            _ => Some((v, c)),
        };
    }
    best.map_or(0.0, |b| b.0)
}

/// Least squares with intercept; SVD gives the minimum-norm answer when
/// predictors are collinear.
fn ols(rows: &[usize], cols: &[Vec<f64>], target: usize) -> ImputeModel {
    let p = cols.len();
    let predictors: Vec<usize> = (0..p).filter(|&j| j != target).collect();
    let a = DMatrix::from_fn(rows.len(), predictors.len() + 1, |i, k| {
        if k == 0 {
            1.0
        } else {
            cols[predictors[k - 1]][rows[i]]
        }
    });
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|&r| cols[target][r]));
    let svd = a.svd(true, true);
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let coef = svd
        .solve(&b, top * 1e-10)
        .unwrap_or_else(|_| DVector::zeros(predictors.len() + 1));
    let mut weights = vec![0.0; p];
    for (k, &j) in predictors.iter().enumerate() {
        weights[j] = coef[k + 1];
    }
    ImputeModel {
        column: target,
        intercept: coef[0],
        weights,
    }
}

fn predict(m: &ImputeModel, cols: &[Vec<f64>], row: usize) -> f64 {
    m.intercept
        + m.weights
            .iter()
            .enumerate()
            .map(|(j, w)| if *w == 0.0 { 0.0 } else { w * cols[j][row] })
            .sum::<f64>()
}

impl FittedTransform {
    /// Learns fill values, regression rounds and scaling from `train` alone.
    pub fn fit(train: &Dataset, options: TransformOptions, fold: Option<usize>) -> Result<FittedTransform> {
        let raw = columns_of(train)?;
        let kinds: Vec<FeatureKind> = train.columns.iter().map(|c| c.kind).collect();
        let fill: Vec<f64> = raw
            .iter()
            .zip(&kinds)
            .map(|(col, kind)| {
                let present: Vec<f64> = col.iter().flatten().copied().collect();
                if present.is_empty() {
                    0.0
                } else if *kind == FeatureKind::Categorical {
                    mode(&present)
                } else {
                    median(&present)
                }
            })
            .collect();
        let regressed: Vec<usize> = if options.impute_data && options.multi_impute {
            (0..raw.len())
                .filter(|&j| kinds[j] == FeatureKind::Quantitative && raw[j].iter().any(Option::is_none))
                .collect()
        } else {
            Vec::new()
        };
        let mut t = FittedTransform {
            version: TRANSFORM_VERSION,
            fold,
            options,
            features: train.feature_names(),
            kinds,
            fill,
            regressed,
            rounds: Vec::new(),
            round_changes: Vec::new(),
            means: Vec::new(),
            scales: Vec::new(),
        };
        if !t.regressed.is_empty() {
            let mut cols = t.initial_fill(&raw);
            for _ in 0..MAX_IMPUTE_ROUNDS {
                let mut models = Vec::with_capacity(t.regressed.len());
                let mut change: f64 = 0.0;
                for &c in &t.regressed {
                    let observed: Vec<usize> = (0..raw[c].len()).filter(|&r| raw[c][r].is_some()).collect();
                    let m = ols(&observed, &cols, c);
                    for r in (0..raw[c].len()).filter(|&r| raw[c][r].is_none()) {
                        let v = predict(&m, &cols, r);
                        change = change.max((v - cols[c][r]).abs());
                        cols[c][r] = v;
                    }
                    models.push(m);
                }
                t.rounds.push(models);
                t.round_changes.push(change);
                if change < IMPUTE_TOLERANCE {
                    break;
                }
            }
        }
        let imputed = t.impute(&raw);
        let (means, scales) = imputed
            .iter()
            .map(|col| {
                let present: Vec<f64> = col.iter().flatten().copied().collect();
                if present.is_empty() {
                    return (0.0, 1.0);
                }
                let n = present.len() as f64;
                let mean = present.iter().sum::<f64>() / n;
                let var = present.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                (mean, if sd > 0.0 { sd } else { 1.0 })
            })
            .unzip();
        t.means = means;
        t.scales = scales;
        Ok(t)
    }

    fn initial_fill(&self, raw: &Matrix) -> Vec<Vec<f64>> {
        raw.iter()
            .zip(&self.fill)
            .map(|(col, f)| col.iter().map(|v| v.unwrap_or(*f)).collect())
            .collect()
    }

    fn impute(&self, raw: &Matrix) -> Matrix {
        if !self.options.impute_data {
            return raw.clone();
        }
        let mut cols = self.initial_fill(raw);
        for round in &self.rounds {
            for m in round {
                let c = m.column;
                for r in (0..raw[c].len()).filter(|&r| raw[c][r].is_none()) {
                    cols[c][r] = predict(m, &cols, r);
                }
            }
        }
        cols.into_iter().map(|c| c.into_iter().map(Some).collect()).collect()
    }

    fn check_features(&self, ds: &Dataset) -> Result<()> {
        let names = ds.feature_names();
        if names != self.features {
            let have: BTreeSet<&String> = names.iter().collect();
            let want: BTreeSet<&String> = self.features.iter().collect();
            let missing: Vec<&&String> = want.difference(&have).collect();
            let extra: Vec<&&String> = have.difference(&want).collect();
            return Err(Error::data(format!(
                "feature set does not match the fitted transform (missing {missing:?}, unexpected {extra:?})"
            )));
        }
        Ok(())
    }

    fn rebuild(ds: &Dataset, cols: Matrix) -> Dataset {
        let mut out = ds.clone();
        for (c, v) in out.columns.iter_mut().zip(cols) {
            c.cells = Cells::Numeric(v);
        }
        out
    }

    /// Imputation only, using training-fitted values.
    pub fn apply_imputer(&self, ds: &Dataset) -> Result<Dataset> {
        self.check_features(ds)?;
        Ok(Self::rebuild(ds, self.impute(&columns_of(ds)?)))
    }

    /// Scaling only, using training means and scales.
    pub fn apply_scaler(&self, ds: &Dataset) -> Result<Dataset> {
        self.check_features(ds)?;
        if !self.options.scale_data {
            return Ok(ds.clone());
        }
        let cols = columns_of(ds)?
            .into_iter()
            .enumerate()
            .map(|(j, col)| col.into_iter().map(|v| v.map(|x| (x - self.means[j]) / self.scales[j])).collect())
            .collect();
        Ok(Self::rebuild(ds, cols))
    }

    pub fn apply(&self, ds: &Dataset) -> Result<Dataset> {
        self.apply_scaler(&self.apply_imputer(ds)?)
    }

    /// Inverse of [`FittedTransform::apply_scaler`].
    pub fn unscale(&self, ds: &Dataset) -> Result<Dataset> {
        self.check_features(ds)?;
        if !self.options.scale_data {
            return Ok(ds.clone());
        }
        let cols = columns_of(ds)?
            .into_iter()
            .enumerate()
            .map(|(j, col)| col.into_iter().map(|v| v.map(|x| x * self.scales[j] + self.means[j])).collect())
            .collect();
        Ok(Self::rebuild(ds, cols))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<FittedTransform> {
        let t: FittedTransform = serde_json::from_str(text)?;
        if t.version != TRANSFORM_VERSION {
            return Err(Error::data(format!("unsupported transform version {}", t.version)));
        }
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Column;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ds(cols: Vec<Column>) -> Dataset {
        let n = cols[0].len();
        Dataset::new("y", (0..n).map(|i| i.to_string()).collect(), (0..n).map(|i| Some((i % 2) as u8)).collect(), cols, None)
            .unwrap()
    }

    fn col(name: &str, kind: FeatureKind, v: &[Option<f64>]) -> Column {
        Column::numeric(name, kind, v.to_vec())
    }

    fn vals(d: &Dataset, name: &str) -> Vec<Option<f64>> {
        d.column(name).unwrap().values().unwrap().to_vec()
    }

    const IMPUTE_ONLY: TransformOptions = TransformOptions {
        impute_data: true,
        scale_data: false,
        multi_impute: false,
    };

    #[test]
    fn mode_and_median_fill() {
        let d = ds(vec![
            col("c", FeatureKind::Categorical, &[Some(0.0), Some(0.0), Some(1.0), None]),
            col("q", FeatureKind::Quantitative, &[Some(1.0), Some(2.0), Some(3.0), None]),
            col("tie", FeatureKind::Categorical, &[Some(3.0), Some(1.0), Some(3.0), Some(1.0)]),
        ]);
        let t = FittedTransform::fit(&d, IMPUTE_ONLY, Some(0)).unwrap();
        let out = t.apply(&d).unwrap();
        assert_eq!(vals(&out, "c")[3], Some(0.0));
        assert_eq!(vals(&out, "q")[3], Some(2.0));
        assert_eq!(t.fill[2], 1.0);
    }

    #[test]
    fn regression_recovers_linear_relation() {
        let x: Vec<Option<f64>> = (0..12).map(|i| Some(i as f64 * 0.7 + 1.0)).collect();
        let mut y: Vec<Option<f64>> = x.iter().map(|v| v.map(|a| 2.0 * a)).collect();
        y[5] = None;
        let d = ds(vec![
            col("x", FeatureKind::Quantitative, &x),
            col("y", FeatureKind::Quantitative, &y),
        ]);
        let t = FittedTransform::fit(
            &d,
            TransformOptions {
                scale_data: false,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let out = t.apply(&d).unwrap();
        assert!((vals(&out, "y")[5].unwrap() - 2.0 * x[5].unwrap()).abs() < 1e-6);
        assert!(t.rounds.len() <= MAX_IMPUTE_ROUNDS);
    }

    #[test]
    fn test_rows_use_training_statistics() {
        let train = ds(vec![col("c", FeatureKind::Categorical, &[Some(0.0), Some(0.0), Some(1.0), Some(0.0)])]);
        let test = ds(vec![col("c", FeatureKind::Categorical, &[Some(1.0), Some(1.0), Some(1.0), None])]);
        let t = FittedTransform::fit(&train, IMPUTE_ONLY, None).unwrap();
        assert_eq!(vals(&t.apply(&test).unwrap(), "c")[3], Some(0.0));
        let complete = ds(vec![col("c", FeatureKind::Categorical, &[Some(1.0), Some(0.0), Some(1.0), Some(1.0)])]);
        assert_eq!(t.apply(&complete).unwrap(), complete);
        let other = ds(vec![col("d", FeatureKind::Categorical, &[Some(1.0); 4])]);
        assert!(t.apply(&other).is_err());
    }

    #[test]
    fn standardization_values() {
        let d = ds(vec![
            col("a", FeatureKind::Quantitative, &[Some(2.0), Some(4.0), Some(6.0)]),
            col("k", FeatureKind::Quantitative, &[Some(5.0); 3]),
        ]);
        let t = FittedTransform::fit(&d, TransformOptions::default(), None).unwrap();
        let out = t.apply(&d).unwrap();
        let a = vals(&out, "a");
        let z = (8.0f64 / 3.0).sqrt();
        for (got, want) in a.iter().zip([-2.0 / z, 0.0, 2.0 / z]) {
            assert!((got.unwrap() - want).abs() < 1e-12);
        }
        assert!((-2.0 / z + 1.224_744_871).abs() < 1e-9);
        assert_eq!(vals(&out, "k"), vec![Some(0.0); 3]);
        let probe = ds(vec![
            col("a", FeatureKind::Quantitative, &[Some(8.0), Some(4.0), Some(4.0)]),
            col("k", FeatureKind::Quantitative, &[Some(5.0); 3]),
        ]);
        assert!((vals(&t.apply(&probe).unwrap(), "a")[0].unwrap() - 2.449_489_742_783_178).abs() < 1e-9);
    }

    #[test]
    fn json_round_trip() {
        let d = ds(vec![
            col("a", FeatureKind::Quantitative, &[Some(2.0), None, Some(6.0), Some(1.0)]),
            col("b", FeatureKind::Quantitative, &[Some(1.0), Some(4.0), None, Some(3.0)]),
        ]);
        let t = FittedTransform::fit(&d, TransformOptions::default(), Some(3)).unwrap();
        let back = FittedTransform::from_json(&t.to_json().unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.apply(&d).unwrap(), t.apply(&d).unwrap());
    }

    fn random(seed: u64, n: usize, p: usize, miss: f64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let cols = (0..p)
            .map(|j| {
                let kind = if j % 3 == 2 { FeatureKind::Categorical } else { FeatureKind::Quantitative };
                let v = (0..n)
                    .map(|i| {
                        if rng.random::<f64>() < miss && i > 1 {
                            None
                        } else if kind == FeatureKind::Categorical {
                            Some(rng.random_range(0..3) as f64)
                        } else {
                            Some(base[i] * j as f64 + rng.random_range(-1.0..1.0))
                        }
                    })
                    .collect();
                Column::numeric(format!("f{j}"), kind, v)
            })
            .collect();
        ds(cols)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn training_output_is_complete_and_standardized(seed in 0u64..5000) {
            let d = random(seed, 30, 5, 0.2);
            let t = FittedTransform::fit(&d, TransformOptions::default(), None).unwrap();
            prop_assert!(t.rounds.len() <= MAX_IMPUTE_ROUNDS);
            let out = t.apply(&d).unwrap();
            prop_assert!(!out.has_missing());
            for c in &out.columns {
                let v: Vec<f64> = c.values().unwrap().iter().map(|x| x.unwrap()).collect();
                let n = v.len() as f64;
                let m = v.iter().sum::<f64>() / n;
                let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
                prop_assert!(m.abs() < 1e-9);
                prop_assert!(var < 1e-18 || (var - 1.0).abs() < 1e-9);
            }
            let back = t.unscale(&out).unwrap();
            let imputed = t.apply_imputer(&d).unwrap();
            for (a, b) in back.columns.iter().zip(&imputed.columns) {
                for (x, y) in a.values().unwrap().iter().zip(b.values().unwrap()) {
                    prop_assert!((x.unwrap() - y.unwrap()).abs() < 1e-9);
                }
            }
            // Scaling twice with the training fit is not the identity.
            let twice = t.apply_scaler(&out).unwrap();
            prop_assert!(t.scales.iter().all(|s| *s == 1.0) || twice != out);
        }

        #[test]
        fn test_data_never_changes_the_fit(seed in 0u64..5000) {
            let train = random(seed, 25, 4, 0.2);
            let test = random(seed + 1, 10, 4, 0.3);
            let t = FittedTransform::fit(&train, TransformOptions::default(), None).unwrap();
            let before = t.clone();
            let out = t.apply(&test).unwrap();
            prop_assert_eq!(&t, &before);
            prop_assert!(!out.has_missing());
            let mut mutated = test.clone();
            if let Cells::Numeric(v) = &mut mutated.columns[0].cells {
                v[0] = Some(1e6);
            }
            t.apply(&mutated).unwrap();
            prop_assert_eq!(&t, &before);
            prop_assert_eq!(FittedTransform::fit(&train, TransformOptions::default(), None).unwrap(), before);
        }

        #[test]
        fn imputed_cell_count_matches_prior_missing(seed in 0u64..5000) {
            let train = random(seed, 30, 4, 0.1);
            let rep = random(seed + 7, 20, 4, 0.3);
            let t = FittedTransform::fit(&train, IMPUTE_ONLY, None).unwrap();
            let out = t.apply(&rep).unwrap();
            let mut changed = 0;
            for (a, b) in rep.columns.iter().zip(&out.columns) {
                for (x, y) in a.values().unwrap().iter().zip(b.values().unwrap()) {
                    match (x, y) {
                        (None, Some(_)) => changed += 1,
                        (Some(u), Some(v)) => prop_assert_eq!(u, v),
                        _ => prop_assert!(false),
                    }
                }
            }
            prop_assert_eq!(changed, rep.columns.iter().map(|c| c.missing_count()).sum::<usize>());
        }
    }
}
