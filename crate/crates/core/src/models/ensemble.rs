use ndarray::{Array2, ArrayView1};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;
use super::tree::{Binned, Tree, TreeParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    All,
}

impl MaxFeatures {
    pub(crate) fn count(self, p: usize) -> usize {
        let m = match self {
            MaxFeatures::Sqrt => (p as f64).sqrt().floor() as usize,
            MaxFeatures::Log2 => (p as f64).log2().floor() as usize,
            MaxFeatures::All => p,
        };
        m.clamp(1, p.max(1))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<Tree>,
}

pub(crate) struct ForestParams {
    pub n_estimators: usize,
    pub tree: TreeParams,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
}

impl RandomForest {
    pub(crate) fn fit(x: &Array2<f64>, y: &[u8], params: &ForestParams, seed: u64) -> RandomForest {
        let binned = Binned::new(x);
        let target: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let n = y.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tp = params.tree;
        tp.max_features = Some(params.max_features.count(x.ncols()));
        let trees = (0..params.n_estimators.max(1))
            .map(|_| {
                let rows: Vec<usize> = if params.bootstrap {
                    let mut r: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                    r.sort_unstable();
                    r
                } else {
                    (0..n).collect()
                };
                let mut tree_rng = ChaCha8Rng::seed_from_u64(rng.random());
                Tree::fit_classifier(&binned, &target, rows, tp, Some(&mut tree_rng))
            })
            .collect();
        RandomForest { trees }
    }

    pub(crate) fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>() / self.trees.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    init: f64,
    learning_rate: f64,
    trees: Vec<Tree>,
}

pub(crate) struct BoostParams {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub tree: TreeParams,
}

fn log_loss(f: &[f64], y: &[f64]) -> f64 {
    f.iter()
        .zip(y)
        .map(|(&e, &t)| {
            let l = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            l - t * e
        })
        .sum::<f64>()
        / f.len() as f64
}

impl GradientBoostedTrees {
    /// Logistic-loss boosting; also returns the training loss after each round.
    pub(crate) fn fit_traced(x: &Array2<f64>, y: &[u8], params: &BoostParams) -> (GradientBoostedTrees, Vec<f64>) {
        let binned = Binned::new(x);
        let n = y.len();
        let t: Vec<f64> = y.iter().map(|&v| f64::from(v)).collect();
        let prev = (t.iter().sum::<f64>() / n as f64).clamp(1e-6, 1.0 - 1e-6);
        let init = (prev / (1.0 - prev)).ln();
        let mut f = vec![init; n];
        let mut losses = vec![log_loss(&f, &t)];
        let mut trees = Vec::with_capacity(params.n_estimators);
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..params.n_estimators {
            for i in 0..n {
                let p = sigmoid(f[i]);
                grad[i] = t[i] - p;
                hess[i] = p * (1.0 - p);
            }
            let tree = Tree::fit_regressor(&binned, &grad, &hess, (0..n).collect(), params.tree);
            for (i, row) in x.rows().into_iter().enumerate() {
                f[i] += params.learning_rate * tree.predict_row(row);
            }
            losses.push(log_loss(&f, &t));
            trees.push(tree);
        }
        (
            GradientBoostedTrees {
                init,
                learning_rate: params.learning_rate,
                trees,
            },
            losses,
        )
    }

    pub(crate) fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let f = self.init + self.learning_rate * self.trees.iter().map(|t| t.predict_row(x)).sum::<f64>();
        sigmoid(f)
    }
}
