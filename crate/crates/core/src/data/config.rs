use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::metrics::MetricId;
use crate::models::AlgorithmId;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMethod {
    Stratified,
    Random,
    Group,
}

impl PartitionMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            PartitionMethod::Stratified => "Stratified",
            PartitionMethod::Random => "Random",
            PartitionMethod::Group => "Group",
        }
    }
}

impl FromStr for PartitionMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "stratified" | "s" => Ok(PartitionMethod::Stratified),
            "random" | "r" => Ok(PartitionMethod::Random),
            "group" | "g" => Ok(PartitionMethod::Group),
            _ => Err(format!("unknown partition method '{s}'")),
        }
    }
}

/// Every run parameter, parsed from a flat `key = value` file.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub experiment_path: PathBuf,
    pub datasets: Vec<PathBuf>,
    pub outcome_label: String,
    pub instance_label: Option<String>,
    pub match_label: Option<String>,
    pub ignore_features: Vec<String>,
    pub categorical_features: Vec<String>,
    pub quantitative_features: Vec<String>,
    pub categorical_cutoff: usize,
    pub cv_partitions: usize,
    pub partition_method: PartitionMethod,
    pub featureeng_missingness: f64,
    pub cleaning_missingness: f64,
    pub correlation_removal_threshold: f64,
    pub sig_cutoff: f64,
    pub instance_subset: usize,
    pub use_turf: bool,
    pub turf_pct: f64,
    pub max_features_to_keep: usize,
    pub filter_poor_features: bool,
    pub n_trials: usize,
    pub timeout: Option<f64>,
    pub primary_metric: MetricId,
    pub metric_weight: MetricId,
    pub impute_data: bool,
    pub scale_data: bool,
    pub multi_impute: bool,
    pub random_seed: u64,
    pub top_fi_features: usize,
    pub algorithms: Vec<AlgorithmId>,
    pub overwrite_cv: bool,
    pub permutation_repeats: usize,
    pub training_subsample: usize,
    pub replication_data: Vec<PathBuf>,
    pub dataset_for_rep: Option<String>,
}

/// Recognised keys, in echo order.
pub const DEFAULT_CONFIG_KEYS: &[&str] = &[
    "experiment_path",
    "datasets",
    "outcome_label",
    "instance_label",
    "match_label",
    "ignore_features",
    "categorical_features",
    "quantitative_features",
    "categorical_cutoff",
    "cv_partitions",
    "partition_method",
    "featureeng_missingness",
    "cleaning_missingness",
    "correlation_removal_threshold",
    "sig_cutoff",
    "instance_subset",
    "use_turf",
    "turf_pct",
    "max_features_to_keep",
    "filter_poor_features",
    "n_trials",
    "timeout",
    "primary_metric",
    "metric_weight",
    "impute_data",
    "scale_data",
    "multi_impute",
    "random_seed",
    "top_fi_features",
    "algorithms",
    "overwrite_cv",
    "permutation_repeats",
    "training_subsample",
    "replication_data",
    "dataset_for_rep",
];

impl Default for Config {
    fn default() -> Self {
        Config {
            experiment_path: PathBuf::from("experiment"),
            datasets: Vec::new(),
            outcome_label: "Class".to_string(),
            instance_label: None,
            match_label: None,
            ignore_features: Vec::new(),
            categorical_features: Vec::new(),
            quantitative_features: Vec::new(),
            categorical_cutoff: 10,
            cv_partitions: 10,
            partition_method: PartitionMethod::Stratified,
            featureeng_missingness: 0.5,
            cleaning_missingness: 0.5,
            correlation_removal_threshold: 1.0,
            sig_cutoff: 0.05,
            instance_subset: 2000,
            use_turf: false,
            turf_pct: 0.5,
            max_features_to_keep: 2000,
            filter_poor_features: true,
            n_trials: 200,
            timeout: None,
            primary_metric: MetricId::BalancedAccuracy,
            metric_weight: MetricId::BalancedAccuracy,
            impute_data: true,
            scale_data: true,
            multi_impute: true,
            random_seed: 42,
            top_fi_features: 40,
            algorithms: AlgorithmId::ALL.to_vec(),
            overwrite_cv: true,
            permutation_repeats: 5,
            training_subsample: 0,
            replication_data: Vec::new(),
            dataset_for_rep: None,
        }
    }
}

fn parse_list(v: &str) -> Vec<String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_owned)
        .collect()
}

fn parse_optional(v: &str) -> Option<String> {
    let t = v.trim();
    if t.is_empty() || t.eq_ignore_ascii_case("none") {
        None
    } else {
        Some(t.to_string())
    }
}

fn parse_bool(v: &str) -> Result<bool, String> {
    match v.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("expected true/false, got '{other}'")),
    }
}

fn parse_num<T: FromStr>(v: &str) -> Result<T, String> {
    v.trim()
        .parse::<T>()
        .map_err(|_| format!("expected a number, got '{}'", v.trim()))
}

impl Config {
    /// Parse a `key = value` file; `#` starts a comment line.
    ///
    /// Unknown keys, malformed values and failed range checks are collected
    /// and reported together.
    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        let mut errors = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                errors.push(format!("line {}: expected 'key = value'", lineno + 1));
                continue;
            };
            if let Err(e) = cfg.set(key.trim(), value.trim()) {
                errors.push(format!("line {}: {e}", lineno + 1));
            }
        }
        errors.extend(cfg.problems());
        if errors.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Set one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let wrap = |r: Result<(), String>| r.map_err(|e| format!("{key}: {e}"));
        wrap(match key {
            "experiment_path" => {
                self.experiment_path = PathBuf::from(value);
                Ok(())
            }
            "datasets" => {
                self.datasets = parse_list(value).into_iter().map(PathBuf::from).collect();
                Ok(())
            }
            "outcome_label" => {
                self.outcome_label = value.to_string();
                Ok(())
            }
            "instance_label" => {
                self.instance_label = parse_optional(value);
                Ok(())
            }
            "match_label" => {
                self.match_label = parse_optional(value);
                Ok(())
            }
            "ignore_features" => {
                self.ignore_features = parse_list(value);
                Ok(())
            }
            "categorical_features" => {
                self.categorical_features = parse_list(value);
                Ok(())
            }
            "quantitative_features" => {
                self.quantitative_features = parse_list(value);
                Ok(())
            }
            "categorical_cutoff" => parse_num(value).map(|v| self.categorical_cutoff = v),
            "cv_partitions" => parse_num(value).map(|v| self.cv_partitions = v),
            "partition_method" => value.parse().map(|v| self.partition_method = v),
            "featureeng_missingness" => parse_num(value).map(|v| self.featureeng_missingness = v),
            "cleaning_missingness" => parse_num(value).map(|v| self.cleaning_missingness = v),
            "correlation_removal_threshold" => {
                parse_num(value).map(|v| self.correlation_removal_threshold = v)
            }
            "sig_cutoff" => parse_num(value).map(|v| self.sig_cutoff = v),
            "instance_subset" => parse_num(value).map(|v| self.instance_subset = v),
            "use_turf" => parse_bool(value).map(|v| self.use_turf = v),
            "turf_pct" => parse_num(value).map(|v| self.turf_pct = v),
            "max_features_to_keep" => parse_num(value).map(|v| self.max_features_to_keep = v),
            "filter_poor_features" => parse_bool(value).map(|v| self.filter_poor_features = v),
            "n_trials" => parse_num(value).map(|v| self.n_trials = v),
            "timeout" => match parse_optional(value) {
                None => {
                    self.timeout = None;
                    Ok(())
                }
                Some(v) => parse_num(&v).map(|t| self.timeout = Some(t)),
            },
            "primary_metric" => value.parse().map(|v| self.primary_metric = v),
            "metric_weight" => value.parse().map(|v| self.metric_weight = v),
            "impute_data" => parse_bool(value).map(|v| self.impute_data = v),
            "scale_data" => parse_bool(value).map(|v| self.scale_data = v),
            "multi_impute" => parse_bool(value).map(|v| self.multi_impute = v),
            "random_seed" => parse_num(value).map(|v| self.random_seed = v),
            "top_fi_features" => parse_num(value).map(|v| self.top_fi_features = v),
            "algorithms" => parse_list(value)
                .iter()
                .map(|s| s.parse::<AlgorithmId>())
                .collect::<Result<Vec<_>, _>>()
                .map(|v| self.algorithms = v),
            "overwrite_cv" => parse_bool(value).map(|v| self.overwrite_cv = v),
            "permutation_repeats" => parse_num(value).map(|v| self.permutation_repeats = v),
            "training_subsample" => parse_num(value).map(|v| self.training_subsample = v),
            "replication_data" => {
                self.replication_data = parse_list(value).into_iter().map(PathBuf::from).collect();
                Ok(())
            }
            "dataset_for_rep" => {
                self.dataset_for_rep = parse_optional(value);
                Ok(())
            }
            _ => Err("unknown configuration key".to_string()),
        })
    }

    /// Range and consistency problems, one message per bad field.
    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        let fraction = |name: &str, v: f64, out: &mut Vec<String>| {
            if !(0.0..=1.0).contains(&v) {
                out.push(format!("{name}: must lie in [0, 1], got {v}"));
            }
        };
        if self.cv_partitions < 2 {
            out.push(format!("cv_partitions: must be at least 2, got {}", self.cv_partitions));
        }
        fraction("featureeng_missingness", self.featureeng_missingness, &mut out);
        fraction("cleaning_missingness", self.cleaning_missingness, &mut out);
        fraction("correlation_removal_threshold", self.correlation_removal_threshold, &mut out);
        if self.correlation_removal_threshold == 0.0 {
            out.push("correlation_removal_threshold: must be greater than 0".to_string());
        }
        fraction("sig_cutoff", self.sig_cutoff, &mut out);
        fraction("turf_pct", self.turf_pct, &mut out);
        if self.use_turf && (self.turf_pct <= 0.0 || self.turf_pct >= 1.0) {
            out.push(format!("turf_pct: must lie strictly inside (0, 1) when use_turf is on, got {}", self.turf_pct));
        }
        if self.n_trials < 1 {
            out.push("n_trials: must be at least 1".to_string());
        }
        if let Some(t) = self.timeout {
            if !(t > 0.0) {
                out.push(format!("timeout: must be positive, got {t}"));
            }
        }
        if self.algorithms.is_empty() {
            out.push("algorithms: at least one algorithm is required".to_string());
        }
        if self.instance_subset < 3 {
            out.push("instance_subset: must be at least 3".to_string());
        }
        if self.max_features_to_keep < 1 {
            out.push("max_features_to_keep: must be at least 1".to_string());
        }
        if self.permutation_repeats < 1 {
            out.push("permutation_repeats: must be at least 1".to_string());
        }
        if self.partition_method == PartitionMethod::Group && self.match_label.is_none() {
            out.push("partition_method: Group partitioning requires match_label".to_string());
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.problems();
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(p))
        }
    }

    /// Canonical `key = value` echo of every field.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for key in DEFAULT_CONFIG_KEYS {
            let _ = writeln!(s, "{key} = {}", self.value_text(key));
        }
        s
    }

    /// Text form of one field, as accepted by [`Config::set`].
    pub fn value_text(&self, key: &str) -> String {
        let join = |v: &[String]| v.join(", ");
        let paths = |v: &[PathBuf]| {
            v.iter()
                .map(|p| p.display().to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let opt = |v: &Option<String>| v.clone().unwrap_or_else(|| "none".to_string());
        match key {
            "experiment_path" => self.experiment_path.display().to_string(),
            "datasets" => paths(&self.datasets),
            "outcome_label" => self.outcome_label.clone(),
            "instance_label" => opt(&self.instance_label),
            "match_label" => opt(&self.match_label),
            "ignore_features" => join(&self.ignore_features),
            "categorical_features" => join(&self.categorical_features),
            "quantitative_features" => join(&self.quantitative_features),
            "categorical_cutoff" => self.categorical_cutoff.to_string(),
            "cv_partitions" => self.cv_partitions.to_string(),
            "partition_method" => self.partition_method.as_str().to_string(),
            "featureeng_missingness" => self.featureeng_missingness.to_string(),
            "cleaning_missingness" => self.cleaning_missingness.to_string(),
            "correlation_removal_threshold" => self.correlation_removal_threshold.to_string(),
            "sig_cutoff" => self.sig_cutoff.to_string(),
            "instance_subset" => self.instance_subset.to_string(),
            "use_turf" => self.use_turf.to_string(),
            "turf_pct" => self.turf_pct.to_string(),
            "max_features_to_keep" => self.max_features_to_keep.to_string(),
            "filter_poor_features" => self.filter_poor_features.to_string(),
            "n_trials" => self.n_trials.to_string(),
            "timeout" => self.timeout.map_or_else(|| "none".to_string(), |t| t.to_string()),
            "primary_metric" => self.primary_metric.as_str().to_string(),
            "metric_weight" => self.metric_weight.as_str().to_string(),
            "impute_data" => self.impute_data.to_string(),
            "scale_data" => self.scale_data.to_string(),
            "multi_impute" => self.multi_impute.to_string(),
            "random_seed" => self.random_seed.to_string(),
            "top_fi_features" => self.top_fi_features.to_string(),
            "algorithms" => self
                .algorithms
                .iter()
                .map(|a| a.as_str())
                .collect::<Vec<_>>()
                .join(", "),
            "overwrite_cv" => self.overwrite_cv.to_string(),
            "permutation_repeats" => self.permutation_repeats.to_string(),
            "training_subsample" => self.training_subsample.to_string(),
            "replication_data" => paths(&self.replication_data),
            "dataset_for_rep" => opt(&self.dataset_for_rep),
            _ => String::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_run_parameters() {
        let c = Config::default();
        assert_eq!(c.cv_partitions, 10);
        assert_eq!(c.partition_method, PartitionMethod::Stratified);
        assert_eq!(c.sig_cutoff, 0.05);
        assert_eq!(c.random_seed, 42);
        assert!(!c.use_turf);
        assert_eq!(c.max_features_to_keep, 2000);
        assert_eq!(c.top_fi_features, 40);
        assert_eq!(c.featureeng_missingness, 0.5);
        assert_eq!(c.cleaning_missingness, 0.5);
        assert_eq!(c.correlation_removal_threshold, 1.0);
        assert!(c.scale_data && c.impute_data && c.multi_impute && c.overwrite_cv);
        assert_eq!(c.primary_metric, MetricId::BalancedAccuracy);
        assert_eq!(c.metric_weight, MetricId::BalancedAccuracy);
        assert_eq!(c.n_trials, 200);
        assert_eq!(c.instance_subset, 2000);
        assert_eq!(c.turf_pct, 0.5);
        assert!(c.filter_poor_features);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn echo_parses_back_identically() {
        let mut c = Config::default();
        c.datasets = vec!["a.csv".into(), "b.csv".into()];
        c.algorithms = vec![AlgorithmId::NaiveBayes, AlgorithmId::DecisionTree];
        c.timeout = Some(30.0);
        c.match_label = Some("pair".into());
        assert_eq!(Config::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn every_bad_field_is_reported() {
        let err = Config::parse("cv_partitions = 1\nsig_cutoff = 2\nbogus = 3\nn_trials = x\n").unwrap_err();
        let Error::Config(msgs) = err else { panic!("wrong error") };
        assert_eq!(msgs.len(), 4, "{msgs:?}");
        assert!(msgs.iter().any(|m| m.contains("bogus")));
        assert!(msgs.iter().any(|m| m.contains("cv_partitions")));
        assert!(msgs.iter().any(|m| m.contains("sig_cutoff")));
        assert!(msgs.iter().any(|m| m.contains("n_trials")));
    }

    #[test]
    fn comments_and_blank_lines() {
        let c = Config::parse("# comment\n\nrandom_seed = 7\ntimeout = none\n").unwrap();
        assert_eq!(c.random_seed, 7);
        assert_eq!(c.timeout, None);
    }
}
