//! Classifier suite, random hyperparameter search and permutation importance.

mod bayes;
mod ensemble;
mod knn;
mod linear;
mod search;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureKind};
use crate::error::{Error, Result};
use crate::metrics::{metric_value, MetricId};

pub use bayes::NaiveBayes;
pub use ensemble::{GradientBoostedTrees, MaxFeatures, RandomForest};
pub use knn::{KNearestNeighbors, KnnWeights};
pub use linear::ElasticNetLogistic;
pub use search::{hyperparameter_search, HyperparamSpace, ParamDomain, SearchOptions, SearchResult, Trial};
pub use tree::Tree;

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AlgorithmId {
    NaiveBayes,
    LogisticRegressionElasticNet,
    DecisionTree,
    RandomForest,
    GradientBoostedTrees,
    KNearestNeighbors,
}

impl AlgorithmId {
    pub const ALL: [AlgorithmId; 6] = [
        AlgorithmId::NaiveBayes,
        AlgorithmId::LogisticRegressionElasticNet,
        AlgorithmId::DecisionTree,
        AlgorithmId::RandomForest,
        AlgorithmId::GradientBoostedTrees,
        AlgorithmId::KNearestNeighbors,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgorithmId::NaiveBayes => "NB",
            AlgorithmId::LogisticRegressionElasticNet => "EN",
            AlgorithmId::DecisionTree => "DT",
            AlgorithmId::RandomForest => "RF",
            AlgorithmId::GradientBoostedTrees => "GB",
            AlgorithmId::KNearestNeighbors => "KNN",
        }
    }

    pub fn long_name(self) -> &'static str {
        match self {
            AlgorithmId::NaiveBayes => "Naive Bayes",
            AlgorithmId::LogisticRegressionElasticNet => "Elastic Net Logistic Regression",
            AlgorithmId::DecisionTree => "Decision Tree",
            AlgorithmId::RandomForest => "Random Forest",
            AlgorithmId::GradientBoostedTrees => "Gradient Boosted Trees",
            AlgorithmId::KNearestNeighbors => "K-Nearest Neighbors",
        }
    }
}

impl fmt::Display for AlgorithmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgorithmId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim().to_ascii_lowercase().replace([' ', '-', '_'], "");
        Ok(match t.as_str() {
            "nb" | "naivebayes" => AlgorithmId::NaiveBayes,
            "en" | "lr" | "elasticnet" | "logisticregression" | "logisticregressionelasticnet" => {
                AlgorithmId::LogisticRegressionElasticNet
            }
            "dt" | "decisiontree" => AlgorithmId::DecisionTree,
            "rf" | "randomforest" => AlgorithmId::RandomForest,
            "gb" | "gbt" | "gradientboosting" | "gradientboostedtrees" => AlgorithmId::GradientBoostedTrees,
            "knn" | "knearestneighbors" => AlgorithmId::KNearestNeighbors,
            _ => return Err(format!("unknown algorithm '{s}'")),
        })
    }
}

/// Complete numeric design matrix with binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelData {
    pub names: Vec<String>,
    pub kinds: Vec<FeatureKind>,
    pub x: Array2<f64>,
    pub y: Vec<u8>,
}

impl ModelData {
    pub fn new(names: Vec<String>, kinds: Vec<FeatureKind>, x: Array2<f64>, y: Vec<u8>) -> Self {
        ModelData { names, kinds, x, y }
    }

    /// Fails if any feature value or outcome is missing.
    pub fn from_dataset(ds: &Dataset) -> Result<ModelData> {
        let y = ds.labels()?;
        let n = ds.n_instances();
        let mut x = Array2::zeros((n, ds.n_features()));
        for (j, col) in ds.columns.iter().enumerate() {
            let vals = col.numeric_values()?;
            for (i, v) in vals.iter().enumerate() {
                x[[i, j]] = v.ok_or_else(|| {
                    Error::data(format!("missing value in '{}' reached model data; impute first", col.name))
                })?;
            }
        }
        Ok(ModelData {
            names: ds.feature_names(),
            kinds: ds.columns.iter().map(|c| c.kind).collect(),
            x,
            y,
        })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn select_rows(&self, rows: &[usize]) -> ModelData {
        ModelData {
            names: self.names.clone(),
            kinds: self.kinds.clone(),
            x: self.x.select(ndarray::Axis(0), rows),
            y: rows.iter().map(|&r| self.y[r]).collect(),
        }
    }

    /// Keep the given feature indices, in that order.
    pub fn select_features(&self, cols: &[usize]) -> ModelData {
        ModelData {
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            kinds: cols.iter().map(|&j| self.kinds[j]).collect(),
            x: self.x.select(ndarray::Axis(1), cols),
            y: self.y.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Text(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Text(v) => f.write_str(v),
        }
    }
}

pub type Hyperparams = BTreeMap<String, ParamValue>;

/// Stable `name=value;...` rendering used for logs and memoisation.
pub fn hyperparams_key(hp: &Hyperparams) -> String {
    hp.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

fn get_int(hp: &Hyperparams, name: &str, default: i64) -> Result<usize> {
    let v = match hp.get(name) {
        None => default,
        Some(ParamValue::Int(v)) => *v,
        Some(ParamValue::Real(v)) => *v as i64,
        Some(ParamValue::Text(t)) => t
            .parse()
            .map_err(|_| Error::Model(format!("hyperparameter {name}: expected integer, got '{t}'")))?,
    };
    usize::try_from(v).map_err(|_| Error::Model(format!("hyperparameter {name} must be non-negative")))
}

fn get_real(hp: &Hyperparams, name: &str, default: f64) -> Result<f64> {
    match hp.get(name) {
        None => Ok(default),
        Some(ParamValue::Int(v)) => Ok(*v as f64),
        Some(ParamValue::Real(v)) => Ok(*v),
        Some(ParamValue::Text(t)) => t
            .parse()
            .map_err(|_| Error::Model(format!("hyperparameter {name}: expected number, got '{t}'"))),
    }
}

fn get_text<'a>(hp: &'a Hyperparams, name: &str, default: &'a str) -> &'a str {
    match hp.get(name) {
        Some(ParamValue::Text(t)) => t,
        _ => default,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum FittedModel {
    NaiveBayes(NaiveBayes),
    Logistic(ElasticNetLogistic),
    DecisionTree(Tree),
    RandomForest(RandomForest),
    Boosted(GradientBoostedTrees),
    Knn(KNearestNeighbors),
}

impl FittedModel {
    fn predict_row(&self, x: ArrayView1<'_, f64>) -> f64 {
        let p = match self {
            FittedModel::NaiveBayes(m) => m.predict_row(x),
            FittedModel::Logistic(m) => m.predict_row(x),
            FittedModel::DecisionTree(m) => m.predict_row(x),
            FittedModel::RandomForest(m) => m.predict_row(x),
            FittedModel::Boosted(m) => m.predict_row(x),
            FittedModel::Knn(m) => m.predict_row(x),
        };
        p.clamp(0.0, 1.0)
    }
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub version: u32,
    pub algorithm: AlgorithmId,
    pub hyperparams: Hyperparams,
    pub fold: Option<usize>,
    pub features: Vec<String>,
    pub seed: u64,
    pub model: FittedModel,
}

fn tree_params(hp: &Hyperparams, default_depth: i64) -> Result<tree::TreeParams> {
    Ok(tree::TreeParams {
        max_depth: get_int(hp, "max_depth", default_depth)?,
        min_samples_split: get_int(hp, "min_samples_split", 2)?,
        min_samples_leaf: get_int(hp, "min_samples_leaf", 1)?,
        max_features: None,
    })
}

/// Train one classifier. Both classes must be present.
pub fn fit(kind: AlgorithmId, data: &ModelData, hp: &Hyperparams, seed: u64) -> Result<TrainedModel> {
    let ones = data.y.iter().filter(|&&v| v == 1).count();
    if ones == 0 || ones == data.n() {
        return Err(Error::Model("training partition holds a single class".to_string()));
    }
    let model = match kind {
        AlgorithmId::NaiveBayes => FittedModel::NaiveBayes(NaiveBayes::fit(data, get_real(hp, "var_smoothing", 1e-9)?)),
        AlgorithmId::LogisticRegressionElasticNet => FittedModel::Logistic(ElasticNetLogistic::fit(
            data,
            get_real(hp, "alpha", 1e-2)?,
            get_real(hp, "l1_ratio", 0.5)?.clamp(0.0, 1.0),
        )),
        AlgorithmId::DecisionTree => {
            let binned = tree::Binned::new(&data.x);
            let y: Vec<f64> = data.y.iter().map(|&v| f64::from(v)).collect();
            FittedModel::DecisionTree(Tree::fit_classifier::<ChaCha8Rng>(
                &binned,
                &y,
                (0..data.n()).collect(),
                tree_params(hp, 1_000)?,
                None,
            ))
        }
        AlgorithmId::RandomForest => {
            let max_features = match get_text(hp, "max_features", "sqrt") {
                "sqrt" => MaxFeatures::Sqrt,
                "log2" => MaxFeatures::Log2,
                "all" => MaxFeatures::All,
                other => return Err(Error::Model(format!("unknown max_features '{other}'"))),
            };
            let params = ensemble::ForestParams {
                n_estimators: get_int(hp, "n_estimators", 100)?,
                tree: tree_params(hp, 1_000)?,
                max_features,
                bootstrap: get_text(hp, "bootstrap", "true") == "true",
            };
            FittedModel::RandomForest(RandomForest::fit(&data.x, &data.y, &params, seed))
        }
        AlgorithmId::GradientBoostedTrees => {
            let params = ensemble::BoostParams {
                n_estimators: get_int(hp, "n_estimators", 100)?,
                learning_rate: get_real(hp, "learning_rate", 0.1)?,
                tree: tree_params(hp, 3)?,
            };
            FittedModel::Boosted(GradientBoostedTrees::fit_traced(&data.x, &data.y, &params).0)
        }
        AlgorithmId::KNearestNeighbors => {
            let weights = match get_text(hp, "weights", "uniform") {
                "uniform" => KnnWeights::Uniform,
                "distance" => KnnWeights::Distance,
                other => return Err(Error::Model(format!("unknown weights '{other}'"))),
            };
            FittedModel::Knn(KNearestNeighbors::fit(&data.x, &data.y, get_int(hp, "n_neighbors", 5)?, weights))
        }
    };
    Ok(TrainedModel {
        version: MODEL_FORMAT_VERSION,
        algorithm: kind,
        hyperparams: hp.clone(),
        fold: None,
        features: data.names.clone(),
        seed,
        model,
    })
}

impl TrainedModel {
    /// p(class = 1) for every row; the data's feature list must match the model's.
    pub fn predict_proba(&self, data: &ModelData) -> Result<Vec<f64>> {
        if data.names != self.features {
            return Err(Error::Model(format!(
                "feature mismatch: model expects {} features {:?}..., data has {}",
                self.features.len(),
                self.features.iter().take(3).collect::<Vec<_>>(),
                data.names.len()
            )));
        }
        Ok(self.predict_matrix(&data.x))
    }

    fn predict_matrix(&self, x: &Array2<f64>) -> Vec<f64> {
        x.rows().into_iter().map(|r| self.model.predict_row(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<TrainedModel> {
        let m: TrainedModel = serde_json::from_str(text)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::Model(format!("unsupported model format version {}", m.version)));
        }
        Ok(m)
    }
}

/// Mean drop in `metric` when each listed feature is shuffled, `n_repeats`
/// times, in `data`. Features outside the model's list are an error.
pub fn permutation_importance(
    model: &TrainedModel,
    data: &ModelData,
    features: &[String],
    metric: MetricId,
    n_repeats: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let baseline = metric_value(metric, &data.y, &model.predict_proba(data)?);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = data.x.clone();
    let mut out = Vec::with_capacity(features.len());
    for name in features {
        let j = model
            .features
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::UnknownFeature(name.clone()))?;
        let original: Vec<f64> = x.column(j).to_vec();
        let mut total = 0.0;
        for _ in 0..n_repeats.max(1) {
            let mut col = original.clone();
            col.shuffle(&mut rng);
            x.column_mut(j).assign(&ndarray::Array1::from(col));
            total += metric_value(metric, &data.y, &model.predict_matrix(&x));
        }
        x.column_mut(j).assign(&ndarray::Array1::from(original));
        let mean = total / n_repeats.max(1) as f64;
        out.push(if metric.higher_is_better() { baseline - mean } else { mean - baseline });
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
