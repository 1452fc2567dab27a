use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fit, hyperparams_key, AlgorithmId, Hyperparams, ModelData, ParamValue};
use crate::error::{Error, Result};
use crate::metrics::{metric_value, MetricId};
use crate::partition::stratified_folds;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamDomain {
    Int { lo: i64, hi: i64 },
    Uniform { lo: f64, hi: f64 },
    LogUniform { lo: f64, hi: f64 },
    Choice(Vec<ParamValue>),
}

impl ParamDomain {
    fn sample<R: Rng>(&self, rng: &mut R) -> ParamValue {
        match self {
            ParamDomain::Int { lo, hi } => ParamValue::Int(rng.random_range(*lo..=*hi)),
            ParamDomain::Uniform { lo, hi } => ParamValue::Real(lo + (hi - lo) * rng.random::<f64>()),
            ParamDomain::LogUniform { lo, hi } => {
                let (a, b) = (lo.ln(), hi.ln());
                ParamValue::Real((a + (b - a) * rng.random::<f64>()).exp())
            }
            ParamDomain::Choice(v) => v[rng.random_range(0..v.len())].clone(),
        }
    }

    fn is_point(&self) -> bool {
        match self {
            ParamDomain::Int { lo, hi } => lo == hi,
            ParamDomain::Uniform { lo, hi } | ParamDomain::LogUniform { lo, hi } => lo == hi,
            ParamDomain::Choice(v) => v.len() == 1,
        }
    }

    fn check(&self) -> Result<(), String> {
        match self {
            ParamDomain::Int { lo, hi } if lo > hi => Err(format!("empty range {lo}..={hi}")),
            ParamDomain::Uniform { lo, hi } if !(lo.is_finite() && hi.is_finite() && lo <= hi) => {
                Err(format!("bad range [{lo}, {hi}]"))
            }
            ParamDomain::LogUniform { lo, hi } if !(*lo > 0.0 && hi.is_finite() && lo <= hi) => {
                Err(format!("bad log range [{lo}, {hi}]"))
            }
            ParamDomain::Choice(v) if v.is_empty() => Err("empty choice set".to_string()),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub params: Vec<(String, ParamDomain)>,
}

fn int(name: &str, lo: i64, hi: i64) -> (String, ParamDomain) {
    (name.to_string(), ParamDomain::Int { lo, hi })
}

fn choice(name: &str, values: &[&str]) -> (String, ParamDomain) {
    (
        name.to_string(),
        ParamDomain::Choice(values.iter().map(|v| ParamValue::Text(v.to_string())).collect()),
    )
}

impl HyperparamSpace {
    /// The shipped search space for each algorithm.
    pub fn default_for(kind: AlgorithmId) -> HyperparamSpace {
        let params = match kind {
            AlgorithmId::NaiveBayes => vec![(
                "var_smoothing".to_string(),
                ParamDomain::Choice(vec![ParamValue::Real(1e-9)]),
            )],
            AlgorithmId::LogisticRegressionElasticNet => vec![
                ("alpha".to_string(), ParamDomain::LogUniform { lo: 1e-4, hi: 10.0 }),
                ("l1_ratio".to_string(), ParamDomain::Uniform { lo: 0.0, hi: 1.0 }),
            ],
            AlgorithmId::DecisionTree => vec![
                int("max_depth", 1, 12),
                int("min_samples_split", 2, 20),
                int("min_samples_leaf", 1, 20),
            ],
            AlgorithmId::RandomForest => vec![
                int("n_estimators", 10, 200),
                int("max_depth", 2, 20),
                int("min_samples_split", 2, 20),
                int("min_samples_leaf", 1, 20),
                choice("max_features", &["sqrt", "log2", "all"]),
                choice("bootstrap", &["true", "false"]),
            ],
            AlgorithmId::GradientBoostedTrees => vec![
                int("n_estimators", 10, 200),
                ("learning_rate".to_string(), ParamDomain::LogUniform { lo: 0.01, hi: 0.5 }),
                int("max_depth", 1, 6),
                int("min_samples_leaf", 1, 20),
            ],
            AlgorithmId::KNearestNeighbors => vec![int("n_neighbors", 1, 50), choice("weights", &["uniform", "distance"])],
        };
        HyperparamSpace { params }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::Model("hyperparameter space is empty".to_string()));
        }
        for (name, d) in &self.params {
            d.check().map_err(|e| Error::Model(format!("hyperparameter {name}: {e}")))?;
        }
        Ok(())
    }

    pub fn is_single_point(&self) -> bool {
        self.params.iter().all(|(_, d)| d.is_point())
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Hyperparams {
        self.params.iter().map(|(n, d)| (n.clone(), d.sample(rng))).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub index: usize,
    pub params: Hyperparams,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: Hyperparams,
    pub best_score: f64,
    pub trials: Vec<Trial>,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub n_trials: usize,
    pub timeout: Option<Duration>,
    pub inner_folds: usize,
    pub metric: MetricId,
    pub seed: u64,
}

/// Seeded random search scored by mean inner-CV `metric`.
///
/// Inner stratified folds are drawn once and shared by every trial; every
/// model in the search is fitted with `seed`. A repeated configuration reuses
/// its earlier score. Ties keep the earlier trial.
pub fn hyperparameter_search(
    kind: AlgorithmId,
    data: &ModelData,
    space: &HyperparamSpace,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    space.validate()?;
    let mut fold_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    fold_rng.set_stream(1);
    let mut sample_rng = ChaCha8Rng::seed_from_u64(opts.seed);
    sample_rng.set_stream(2);

    let k = opts.inner_folds.clamp(2, data.n().max(2));
    let split = stratified_folds(&data.y, k, &mut fold_rng)?;
    let inner: Vec<(ModelData, ModelData)> = (0..split.k())
        .map(|f| (data.select_rows(&split.train(f)), data.select_rows(split.test(f))))
        .collect();

    let n_trials = if space.is_single_point() { 1 } else { opts.n_trials.max(1) };
    let start = Instant::now();
    let mut memo: HashMap<String, f64> = HashMap::new();
    let mut trials = Vec::with_capacity(n_trials);
    let sign = if opts.metric.higher_is_better() { 1.0 } else { -1.0 };
    for index in 0..n_trials {
        if index > 0 && opts.timeout.is_some_and(|t| start.elapsed() >= t) {
            break;
        }
        let params = space.sample(&mut sample_rng);
        let key = hyperparams_key(&params);
        let score = match memo.get(&key) {
            Some(&s) => s,
            None => {
                let mut total = 0.0;
                for (train, test) in &inner {
                    // A degenerate inner fold scores as a failed trial, not a failed search.
                    total += match fit(kind, train, &params, opts.seed) {
                        Ok(m) => metric_value(opts.metric, &test.y, &m.predict_matrix(&test.x)),
                        Err(_) => 0.0,
                    };
                }
                let s = total / inner.len() as f64;
                memo.insert(key, s);
                s
            }
        };
        trials.push(Trial { index, params, score });
    }
    let best = trials
        .iter()
        .fold(None::<&Trial>, |b, t| match b {
            Some(b) if sign * t.score <= sign * b.score => Some(b),
            _ => Some(t),
        })
        .ok_or_else(|| Error::Model("search ran no trials".to_string()))?;
    Ok(SearchResult {
        best: best.params.clone(),
        best_score: best.score,
        trials,
    })
}
