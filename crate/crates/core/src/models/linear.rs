use ndarray::{Array1, ArrayView1};
use serde::{Deserialize, Serialize};

use super::{sigmoid, ModelData};

/// Logistic regression with an elastic-net penalty on the weights:
/// mean log-loss + alpha * (l1_ratio * |w|_1 + (1 - l1_ratio) / 2 * |w|^2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ElasticNetLogistic {
    pub intercept: f64,
    pub weights: Vec<f64>,
}

const MAX_OUTER: usize = 100;
const MAX_SWEEPS: usize = 500;
const TOL: f64 = 1e-8;

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn log1p_exp(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

pub(crate) fn objective(data: &ModelData, b: f64, w: &Array1<f64>, alpha: f64, l1_ratio: f64) -> f64 {
    let eta = data.x.dot(w) + b;
    let n = data.y.len() as f64;
    let loss: f64 = eta
        .iter()
        .zip(&data.y)
        .map(|(&e, &y)| log1p_exp(e) - f64::from(y) * e)
        .sum::<f64>()
        / n;
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    let l2: f64 = w.iter().map(|v| v * v).sum();
    loss + alpha * (l1_ratio * l1 + (1.0 - l1_ratio) / 2.0 * l2)
}

impl ElasticNetLogistic {
    /// Proximal Newton: each outer step minimises the penalised quadratic
    /// model by coordinate descent, then backtracks on the true objective.
    pub(crate) fn fit(data: &ModelData, alpha: f64, l1_ratio: f64) -> ElasticNetLogistic {
        let (n, p) = data.x.dim();
        let nf = n as f64;
        let y: Array1<f64> = data.y.iter().map(|&v| f64::from(v)).collect();
        let ybar = y.mean().unwrap_or(0.5).clamp(1e-6, 1.0 - 1e-6);
        let mut b = (ybar / (1.0 - ybar)).ln();
        let mut w = Array1::<f64>::zeros(p);
        let l1 = alpha * l1_ratio;
        let l2 = alpha * (1.0 - l1_ratio);
        let mut f_cur = objective(data, b, &w, alpha, l1_ratio);

        for _ in 0..MAX_OUTER {
            let eta = data.x.dot(&w) + b;
            let prob = eta.mapv(sigmoid);
            let wt = prob.mapv(|q| (q * (1.0 - q)).max(1e-5));
            let z = &eta + &((&y - &prob) / &wt);

            let mut nb = b;
            let mut nw = w.clone();
            let mut r = &z - &(data.x.dot(&nw) + nb);
            let sum_wt = wt.sum();
            let a: Vec<f64> = (0..p)
                .map(|j| data.x.column(j).iter().zip(&wt).map(|(x, q)| q * x * x).sum::<f64>() / nf)
                .collect();
            for _ in 0..MAX_SWEEPS {
                let mut max_change: f64 = 0.0;
                let db = r.iter().zip(&wt).map(|(ri, q)| q * ri).sum::<f64>() / sum_wt;
                nb += db;
                r -= db;
                max_change = max_change.max(db.abs());
                for j in 0..p {
                    let xj = data.x.column(j);
                    if a[j] == 0.0 {
                        continue;
                    }
                    let c = xj.iter().zip(&wt).zip(&r).map(|((x, q), ri)| q * x * ri).sum::<f64>() / nf
                        + a[j] * nw[j];
                    let new = soft_threshold(c, l1) / (a[j] + l2);
                    let delta = new - nw[j];
                    if delta != 0.0 {
                        r.scaled_add(-delta, &xj);
                        nw[j] = new;
                        max_change = max_change.max(delta.abs());
                    }
                }
                if max_change < TOL * 0.1 {
                    break;
                }
            }

            let db = nb - b;
            let dw = &nw - &w;
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..30 {
                let tb = b + t * db;
                let tw = &w + &(&dw * t);
                let f_new = objective(data, tb, &tw, alpha, l1_ratio);
                if f_new <= f_cur {
                    b = tb;
                    w = tw;
                    f_cur = f_new;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            let step = t * dw.iter().fold(db.abs(), |m, v| m.max(v.abs()));
            if !accepted || step < TOL {
                break;
            }
        }
        ElasticNetLogistic {
            intercept: b,
            weights: w.to_vec(),
        }
    }

    pub(crate) fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let eta = self.intercept + x.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>();
        sigmoid(eta)
    }
}
