use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::ModelData;
use crate::data::{value_key, FeatureKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum FeatureModel {
    /// Per-class mean and variance.
    Gaussian { mean: [f64; 2], var: [f64; 2] },
    /// Per-class smoothed log-probabilities of each seen value, plus the log
    /// probability assigned to unseen values.
    Frequencies {
        values: Vec<f64>,
        log_p: [Vec<f64>; 2],
        log_unseen: [f64; 2],
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayes {
    log_prior: [f64; 2],
    features: Vec<FeatureModel>,
}

impl NaiveBayes {
    /// `var_smoothing` is added to every variance as a fraction of the largest
    /// feature variance.
    pub(crate) fn fit(data: &ModelData, var_smoothing: f64) -> NaiveBayes {
        let n = data.y.len();
        let rows: [Vec<usize>; 2] = [
            (0..n).filter(|&i| data.y[i] == 0).collect(),
            (0..n).filter(|&i| data.y[i] == 1).collect(),
        ];
        let log_prior = [
            (rows[0].len() as f64 / n as f64).ln(),
            (rows[1].len() as f64 / n as f64).ln(),
        ];
        let max_var = data
            .x
            .columns()
            .into_iter()
            .map(|c| {
                let m = c.mean().unwrap_or(0.0);
                c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64
            })
            .fold(0.0, f64::max);
        let eps = (var_smoothing * max_var).max(1e-12);
        let features = (0..data.x.ncols())
            .map(|j| {
                let col = data.x.column(j);
                match data.kinds[j] {
                    FeatureKind::Quantitative => {
                        let mut mean = [0.0; 2];
                        let mut var = [0.0; 2];
                        for c in 0..2 {
                            let k = rows[c].len() as f64;
                            let m = rows[c].iter().map(|&i| col[i]).sum::<f64>() / k;
                            let v = rows[c].iter().map(|&i| (col[i] - m).powi(2)).sum::<f64>() / k;
                            mean[c] = m;
                            var[c] = v + eps;
                        }
                        FeatureModel::Gaussian { mean, var }
                    }
                    FeatureKind::Categorical => {
                        let mut values: Vec<f64> = col.iter().copied().collect();
                        values.sort_by(f64::total_cmp);
                        values.dedup_by(|a, b| value_key(*a) == value_key(*b));
                        let index: HashMap<u64, usize> =
                            values.iter().enumerate().map(|(i, &v)| (value_key(v), i)).collect();
                        let levels = values.len() as f64;
                        let mut log_p = [Vec::new(), Vec::new()];
                        let mut log_unseen = [0.0; 2];
                        for c in 0..2 {
                            let mut counts = vec![0.0; values.len()];
                            for &i in &rows[c] {
                                counts[index[&value_key(col[i])]] += 1.0;
                            }
                            let denom = rows[c].len() as f64 + levels;
                            log_p[c] = counts.iter().map(|k| ((k + 1.0) / denom).ln()).collect();
                            log_unseen[c] = (1.0 / denom).ln();
                        }
                        FeatureModel::Frequencies {
                            values,
                            log_p,
                            log_unseen,
                        }
                    }
                }
            })
            .collect();
        NaiveBayes { log_prior, features }
    }

    pub(crate) fn predict_row(&self, x: ndarray::ArrayView1<'_, f64>) -> f64 {
        let mut ll = self.log_prior;
        for (j, fm) in self.features.iter().enumerate() {
            let v = x[j];
            match fm {
                FeatureModel::Gaussian { mean, var } => {
                    for c in 0..2 {
                        ll[c] += -0.5 * (2.0 * std::f64::consts::PI * var[c]).ln()
                            - (v - mean[c]).powi(2) / (2.0 * var[c]);
                    }
                }
                FeatureModel::Frequencies {
                    values,
                    log_p,
                    log_unseen,
                } => {
                    let pos = values
                        .binary_search_by(|probe| probe.total_cmp(&v))
                        .ok()
                        .or_else(|| values.iter().position(|&u| value_key(u) == value_key(v)));
                    for c in 0..2 {
                        ll[c] += match pos {
                            Some(i) => log_p[c][i],
                            None => log_unseen[c],
                        };
                    }
                }
            }
        }
        super::sigmoid(ll[1] - ll[0])
    }
}
