use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::seed::{derive_seed, SeedLabels};
use super::store::{
    load_dataset, num, parse_num, read_json, read_text, save_dataset, write_json, write_text, Table, GROUP_COLUMN, ID_COLUMN,
};
use super::tables::{metrics_file, read_metric_table, write_comparisons, write_evaluation_tables};
use super::{Experiment, Filter};
use crate::data::{encode_text_labels, infer_feature_types, load_delimited, Dataset, LabelMap};
use crate::eda::{pearson_correlation, summarize, univariate_tests, EdaSummary};
use crate::error::{Error, Result};
use crate::importance::{collective_select, multisurf, mutual_information, turf, FiAlgorithm, FiScores};
use crate::metrics::{composite_fi, evaluate, Evaluation, MetricId, MetricVector};
use crate::models::{
    fit, hyperparameter_search, hyperparams_key, permutation_importance, AlgorithmId, HyperparamSpace, ModelData,
    SearchOptions, TrainedModel,
};
use crate::partition::{make_folds, CvSplit};
use crate::processing::{process, ProcessingSchema};
use crate::replication::{evaluate_replication, prepare_replication};
use crate::stats::compare_datasets;
use crate::transform::{FittedTransform, TransformOptions};

pub const EDA_INITIAL: &str = "eda_initial.json";
pub const EDA_PROCESSED: &str = "eda_processed.json";
pub const PROCESSING_LOG: &str = "processing_log.csv";
pub const PROCESSING_LOG_JSON: &str = "processing_log.json";
pub const SCHEMA_FILE: &str = "schema.json";
pub const LABEL_MAP_FILE: &str = "label_map.tsv";
pub const PROCESSED_FILE: &str = "processed.csv";
pub const FOLDS_FILE: &str = "folds.csv";
pub const COMPOSITE_FI_FILE: &str = "composite_fi.csv";
pub const EDA_REPLICATION: &str = "eda_replication.json";

fn seed(exp: &Experiment, labels: SeedLabels<'_>) -> u64 {
    derive_seed(exp.config.random_seed, &labels)
}

fn rng(exp: &Experiment, labels: SeedLabels<'_>) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed(exp, labels))
}

fn write_eda(dir: &Path, json: &str, csv: &str, s: &EdaSummary) -> Result<()> {
    write_json(&dir.join(json), s)?;
    let mut t = Table::new(&[
        "feature", "kind", "count", "missing", "distinct", "mean", "std", "min", "q1", "median", "q3", "max",
    ]);
    let o = |v: Option<f64>| v.map(num).unwrap_or_default();
    for c in &s.columns {
        t.push(vec![
            c.name.clone(),
            c.kind.as_str().to_string(),
            c.count.to_string(),
            c.missing_count.to_string(),
            c.distinct_count.to_string(),
            o(c.mean),
            o(c.std),
            o(c.min),
            o(c.q1),
            o(c.median),
            o(c.q3),
            o(c.max),
        ]);
    }
    t.write(&dir.join(csv))
}

fn create_file(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

/// EDA, cleaning and feature engineering, then CV partitioning.
pub(super) fn phase1(exp: &Experiment, name: &str) -> Result<()> {
    let cfg = &exp.config;
    let entry = exp.datasets.iter().find(|d| d.name == name).expect("scope was checked");
    let dir = exp.phase_dir(name, 1);
    let raw = load_delimited(
        &entry.path,
        &cfg.outcome_label,
        cfg.instance_label.as_deref(),
        cfg.match_label.as_deref(),
    )?;
    for reserved in [ID_COLUMN, GROUP_COLUMN] {
        if raw.column(reserved).is_some() {
            return Err(Error::Config(vec![format!(
                "{}: column '{reserved}' is reserved for stored artifacts; name it as instance_label or match_label",
                entry.path.display()
            )]));
        }
    }
    let (encoded, map) = encode_text_labels(&raw);
    let cat: BTreeSet<String> = cfg.categorical_features.iter().cloned().collect();
    let quant: BTreeSet<String> = cfg.quantitative_features.iter().cloned().collect();
    let typed = infer_feature_types(&encoded, cfg.categorical_cutoff, &cat, &quant)?;
    write_eda(&dir, EDA_INITIAL, "eda_initial_columns.csv", &summarize(&typed))?;

    let processed = process(&typed, cfg, &mut rng(exp, SeedLabels::new(name, 1).algorithm("processing")))?;
    processed.log.write_csv(create_file(&dir.join(PROCESSING_LOG))?)?;
    write_json(&dir.join(PROCESSING_LOG_JSON), &processed.log)?;
    write_text(&dir.join(SCHEMA_FILE), &processed.schema.to_json()?)?;
    map.write_to(create_file(&dir.join(LABEL_MAP_FILE))?)?;

    let data = &processed.data;
    write_eda(&dir, EDA_PROCESSED, "eda_processed_columns.csv", &summarize(data))?;
    let names = data.feature_names();
    let mut corr = Table::new(&std::iter::once("feature".to_string()).chain(names.iter().cloned()).collect::<Vec<_>>());
    for (i, row) in pearson_correlation(data)?.into_iter().enumerate() {
        corr.push(std::iter::once(names[i].clone()).chain(row.into_iter().map(num)).collect());
    }
    corr.write(&dir.join("correlation.csv"))?;
    let mut uni = Table::new(&["feature", "test", "statistic", "p_value", "significant"]);
    for u in univariate_tests(data)? {
        uni.push(vec![
            u.feature,
            u.test,
            num(u.statistic),
            num(u.p_value),
            super::tables::significance_flag(u.p_value, cfg.sig_cutoff),
        ]);
    }
    uni.write(&dir.join("univariate.csv"))?;

    let split = make_folds(
        data,
        cfg.partition_method,
        cfg.cv_partitions,
        &mut rng(exp, SeedLabels::new(name, 1).algorithm("partition")),
    )?;
    let mut folds = Table::new(&[ID_COLUMN, "fold"]);
    for (id, f) in data.instance_ids.iter().zip(split.assignment()) {
        folds.push(vec![id.clone(), f.to_string()]);
    }
    folds.write(&dir.join(FOLDS_FILE))?;
    save_dataset(&dir.join(PROCESSED_FILE), data)
}

pub(super) fn load_schema(exp: &Experiment, name: &str) -> Result<ProcessingSchema> {
    ProcessingSchema::from_json(&read_text(&exp.phase_dir(name, 1).join(SCHEMA_FILE))?)
}

fn load_split(exp: &Experiment, name: &str, data: &Dataset) -> Result<CvSplit> {
    let t = Table::read(&exp.phase_dir(name, 1).join(FOLDS_FILE))?;
    let ids: Vec<&String> = t.rows.iter().map(|r| &r[0]).collect();
    if ids.len() != data.n_instances() || ids.iter().zip(&data.instance_ids).any(|(a, b)| *a != b) {
        return Err(Error::data("fold assignment does not match the processed data"));
    }
    let assignment = t
        .rows
        .iter()
        .map(|r| r[1].parse().map_err(|_| Error::data(format!("bad fold index '{}'", r[1]))))
        .collect::<Result<Vec<usize>>>()?;
    CvSplit::from_assignment(&assignment, exp.config.cv_partitions)
}

fn folds(exp: &Experiment, filter: &Filter) -> Vec<usize> {
    (0..exp.config.cv_partitions).filter(|&f| filter.takes_fold(f)).collect()
}

fn cv_file(dir: &Path, part: &str, fold: usize) -> PathBuf {
    dir.join(format!("{part}_{fold}.csv"))
}

fn transform_file(exp: &Experiment, name: &str, fold: usize) -> PathBuf {
    exp.phase_dir(name, 2).join(format!("transform_{fold}.json"))
}

/// Fits imputation and scaling on each training partition.
pub(super) fn phase2(exp: &Experiment, name: &str, filter: &Filter) -> Result<()> {
    let cfg = &exp.config;
    let schema = load_schema(exp, name)?;
    let data = load_dataset(
        &exp.phase_dir(name, 1).join(PROCESSED_FILE),
        &cfg.outcome_label,
        &schema.output_features,
    )?;
    let split = load_split(exp, name, &data)?;
    let dir = exp.phase_dir(name, 2);
    let options = TransformOptions {
        impute_data: cfg.impute_data,
        scale_data: cfg.scale_data,
        multi_impute: cfg.multi_impute,
    };
    folds(exp, filter)
        .into_par_iter()
        .map(|f| {
            let train = data.select_rows(&split.train(f));
            let test = data.select_rows(split.test(f));
            if !cfg.overwrite_cv {
                save_dataset(&cv_file(&dir.join("raw"), "train", f), &train)?;
                save_dataset(&cv_file(&dir.join("raw"), "test", f), &test)?;
            }
            let t = FittedTransform::fit(&train, options, Some(f))?;
            write_text(&transform_file(exp, name, f), &t.to_json()?)?;
            save_dataset(&cv_file(&dir, "train", f), &t.apply(&train)?)?;
            save_dataset(&cv_file(&dir, "test", f), &t.apply(&test)?)
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(())
}

fn load_partition(exp: &Experiment, name: &str, schema: &ProcessingSchema, part: &str, fold: usize) -> Result<Dataset> {
    load_dataset(
        &cv_file(&exp.phase_dir(name, 2), part, fold),
        &exp.config.outcome_label,
        &schema.output_features,
    )
}

fn fi_file(dir: &Path, alg: FiAlgorithm, fold: usize) -> PathBuf {
    dir.join(format!("{}_{fold}.csv", alg.as_str()))
}

/// Mutual information and MultiSURF (or TuRF) on each training partition.
pub(super) fn phase3(exp: &Experiment, name: &str, filter: &Filter) -> Result<()> {
    let cfg = &exp.config;
    let schema = load_schema(exp, name)?;
    let dir = exp.phase_dir(name, 3);
    folds(exp, filter)
        .into_par_iter()
        .map(|f| {
            let data = ModelData::from_dataset(&load_partition(exp, name, &schema, "train", f)?)?;
            let mi = FiScores::new(FiAlgorithm::MutualInformation, Some(f), data.names.clone(), mutual_information(&data))?;
            let mut r = rng(exp, SeedLabels::new(name, 3).fold(f).algorithm(FiAlgorithm::MultiSurf.as_str()));
            let scores = if cfg.use_turf {
                turf(&data, cfg.turf_pct, cfg.instance_subset, &mut r)?.scores
            } else {
                multisurf(&data, cfg.instance_subset, &mut r)?
            };
            let ms = FiScores::new(FiAlgorithm::MultiSurf, Some(f), data.names.clone(), scores)?;
            mi.write_csv(create_file(&fi_file(&dir, FiAlgorithm::MutualInformation, f))?)?;
            ms.write_csv(create_file(&fi_file(&dir, FiAlgorithm::MultiSurf, f))?)
        })
        .collect::<Result<Vec<()>>>()?;
    Ok(())
}

pub(super) fn features_file(exp: &Experiment, name: &str, fold: usize) -> PathBuf {
    exp.phase_dir(name, 4).join(format!("selected_features_{fold}.txt"))
}

pub(super) fn read_features(exp: &Experiment, name: &str, fold: usize) -> Result<Vec<String>> {
    Ok(read_text(&features_file(exp, name, fold))?
        .lines()
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect())
}

fn read_fi(exp: &Experiment, name: &str, alg: FiAlgorithm, fold: usize, features: &[String]) -> Result<FiScores> {
    let path = fi_file(&exp.phase_dir(name, 3), alg, fold);
    FiScores::read_csv(read_text(&path)?.as_bytes(), alg, Some(fold), features)
}

/// Collective feature selection per fold, plus mean scores over folds.
pub(super) fn phase4(exp: &Experiment, name: &str, filter: &Filter) -> Result<()> {
    let cfg = &exp.config;
    let schema = load_schema(exp, name)?;
    let features: Vec<String> = schema.output_features.iter().map(|f| f.name.clone()).collect();
    let dir = exp.phase_dir(name, 4);
    folds(exp, filter)
        .into_par_iter()
        .map(|f| {
            let mi = read_fi(exp, name, FiAlgorithm::MutualInformation, f, &features)?;
            let ms = read_fi(exp, name, FiAlgorithm::MultiSurf, f, &features)?;
            let sel = collective_select(&mi, &ms, cfg.filter_poor_features, cfg.max_features_to_keep)?;
            let kept: BTreeSet<&String> = sel.kept.iter().collect();
            let mut t = Table::new(&["feature", "mutual_information", "multisurf", "kept"]);
            for (j, feat) in features.iter().enumerate() {
                t.push(vec![
                    feat.clone(),
                    num(mi.scores[j]),
                    num(ms.scores[j]),
                    kept.contains(feat).to_string(),
                ]);
            }
            t.write(&dir.join(format!("selection_{f}.csv")))?;
            let text: String = sel.kept.iter().map(|k| format!("{k}\n")).collect();
            write_text(&features_file(exp, name, f), &text)
        })
        .collect::<Result<Vec<()>>>()?;

    let all: Vec<usize> = (0..cfg.cv_partitions).collect();
    if all.iter().all(|&f| features_file(exp, name, f).exists()) {
        let mut t = Table::new(&["feature", "mean_mutual_information", "mean_multisurf", "times_kept"]);
        let mut sums = vec![(0.0, 0.0, 0usize); features.len()];
        for &f in &all {
            let mi = read_fi(exp, name, FiAlgorithm::MutualInformation, f, &features)?;
            let ms = read_fi(exp, name, FiAlgorithm::MultiSurf, f, &features)?;
            let kept: BTreeSet<String> = read_features(exp, name, f)?.into_iter().collect();
            for (j, s) in sums.iter_mut().enumerate() {
                s.0 += mi.scores[j];
                s.1 += ms.scores[j];
                s.2 += usize::from(kept.contains(&features[j]));
            }
        }
        let k = all.len() as f64;
        for (feat, s) in features.iter().zip(sums) {
            t.push(vec![feat.clone(), num(s.0 / k), num(s.1 / k), s.2.to_string()]);
        }
        t.write(&dir.join("fi_summary.csv"))?;
    }
    Ok(())
}

pub(super) fn unit_dir(exp: &Experiment, name: &str, alg: AlgorithmId, fold: usize) -> PathBuf {
    exp.phase_dir(name, 5).join(alg.as_str()).join(format!("fold{fold}"))
}

/// Seeded stratified subsample of `m` rows, in ascending row order.
pub fn stratified_subsample(y: &[u8], m: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = y.len();
    let mut out = Vec::with_capacity(m);
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..n).filter(|&i| y[i] == class).collect();
        let take = ((m as f64 * idx.len() as f64 / n as f64).round() as usize).clamp(usize::from(!idx.is_empty()), idx.len());
        idx.shuffle(rng);
        out.extend_from_slice(&idx[..take]);
    }
    out.sort_unstable();
    out
}

fn save_evaluation(dir: &Path, e: &Evaluation) -> Result<()> {
    let mut t = Table::new(&["metric", "value"]);
    for m in MetricId::ALL {
        t.push(vec![m.as_str().to_string(), num(e.metrics.get(m))]);
    }
    t.write(&dir.join("metrics.csv"))?;
    for (file, pts) in [("roc.csv", &e.roc), ("prc.csv", &e.prc)] {
        let mut c = Table::new(&["x", "y"]);
        for &(x, y) in pts {
            c.push(vec![num(x), num(y)]);
        }
        c.write(&dir.join(file))?;
    }
    Ok(())
}

fn load_evaluation(dir: &Path) -> Result<Evaluation> {
    let t = Table::read(&dir.join("metrics.csv"))?;
    let values = t.rows.iter().map(|r| parse_num(&r[1])).collect::<Result<Vec<f64>>>()?;
    if values.len() != MetricId::ALL.len() {
        return Err(Error::data(format!("{} does not hold all metrics", dir.display())));
    }
    let curve = |file: &str| -> Result<Vec<(f64, f64)>> {
        Table::read(&dir.join(file))?
            .rows
            .iter()
            .map(|r| Ok((parse_num(&r[0])?, parse_num(&r[1])?)))
            .collect()
    };
    Ok(Evaluation {
        metrics: MetricVector(values),
        roc: curve("roc.csv")?,
        prc: curve("prc.csv")?,
    })
}

fn model_unit(exp: &Experiment, name: &str, schema: &ProcessingSchema, fold: usize, alg: AlgorithmId) -> Result<()> {
    let cfg = &exp.config;
    let start = Instant::now();
    let kept = read_features(exp, name, fold)?;
    let train = load_partition(exp, name, schema, "train", fold)?.select_columns(&kept)?;
    let test = load_partition(exp, name, schema, "test", fold)?.select_columns(&kept)?;
    let mut train_data = ModelData::from_dataset(&train)?;
    let a = alg.as_str();
    if cfg.training_subsample > 0 && train_data.n() > cfg.training_subsample {
        let mut r = rng(exp, SeedLabels::new(name, 5).fold(fold).algorithm(&format!("{a}:subsample")));
        let rows = stratified_subsample(&train_data.y, cfg.training_subsample, &mut r);
        train_data = train_data.select_rows(&rows);
    }
    let model_seed = seed(exp, SeedLabels::new(name, 5).fold(fold).algorithm(a));
    let search = hyperparameter_search(
        alg,
        &train_data,
        &HyperparamSpace::default_for(alg),
        &SearchOptions {
            n_trials: cfg.n_trials,
            timeout: cfg.timeout.map(Duration::from_secs_f64),
            inner_folds: 3,
            metric: cfg.primary_metric,
            seed: model_seed,
        },
    )?;
    let mut model = fit(alg, &train_data, &search.best, model_seed)?;
    model.fold = Some(fold);
    let test_data = ModelData::from_dataset(&test)?;
    let evaluation = evaluate(&test_data.y, &model.predict_proba(&test_data)?)?;
    let perm_seed = seed(exp, SeedLabels::new(name, 5).fold(fold).algorithm(&format!("{a}:permutation")));
    let fi = permutation_importance(&model, &test_data, &kept, cfg.primary_metric, cfg.permutation_repeats, perm_seed)?;

    let dir = unit_dir(exp, name, alg, fold);
    write_text(&dir.join("model.json"), &model.to_json()?)?;
    save_evaluation(&dir, &evaluation)?;
    let mut t = Table::new(&["feature", "importance"]);
    for (f, s) in kept.iter().zip(&fi) {
        t.push(vec![f.clone(), num(*s)]);
    }
    t.write(&dir.join("permutation_importance.csv"))?;
    let mut trials = Table::new(&["trial", "params", "score"]);
    for tr in &search.trials {
        trials.push(vec![tr.index.to_string(), hyperparams_key(&tr.params), num(tr.score)]);
    }
    trials.write(&dir.join("trials.csv"))?;
    let mut hp = Table::new(&["param", "value"]);
    for (k, v) in &search.best {
        hp.push(vec![k.clone(), v.to_string()]);
    }
    hp.write(&dir.join("hyperparams.csv"))?;
    write_text(&dir.join("seconds.txt"), &format!("{:.3}\n", start.elapsed().as_secs_f64()))
}

/// Hyperparameter search, training, evaluation and permutation importance
/// per (fold, algorithm).
pub(super) fn phase5(exp: &Experiment, name: &str, filter: &Filter) -> Result<()> {
    let schema = load_schema(exp, name)?;
    let units: Vec<(usize, AlgorithmId)> = folds(exp, filter)
        .into_iter()
        .flat_map(|f| exp.config.algorithms.iter().map(move |&a| (f, a)))
        .filter(|&(_, a)| filter.takes_algorithm(a))
        .collect();
    units
        .into_par_iter()
        .map(|(f, a)| model_unit(exp, name, &schema, f, a))
        .collect::<Result<Vec<()>>>()?;
    Ok(())
}

pub(super) fn load_model(exp: &Experiment, name: &str, alg: AlgorithmId, fold: usize) -> Result<TrainedModel> {
    TrainedModel::from_json(&read_text(&unit_dir(exp, name, alg, fold).join("model.json"))?)
}

/// Metric tables, curves, algorithm comparisons, permutation and composite
/// feature importance.
pub(super) fn phase6(exp: &Experiment, name: &str) -> Result<()> {
    let cfg = &exp.config;
    let schema = load_schema(exp, name)?;
    let features: Vec<String> = schema.output_features.iter().map(|f| f.name.clone()).collect();
    let dir = exp.phase_dir(name, 6);
    let k = cfg.cv_partitions;

    let mut per_algorithm = Vec::new();
    let mut fi_inputs = Vec::new();
    let mut hp = Table::new(&["algorithm", "fold", "hyperparams"]);
    let mut runtime = Table::new(&["algorithm", "seconds"]);
    for &alg in &cfg.algorithms {
        let a = alg.as_str().to_string();
        let mut evals = Vec::with_capacity(k);
        let mut fi_sum = vec![0.0; features.len()];
        let mut seconds = 0.0;
        for f in 0..k {
            let udir = unit_dir(exp, name, alg, f);
            evals.push((f, load_evaluation(&udir)?));
            for row in Table::read(&udir.join("permutation_importance.csv"))?.rows {
                let j = features
                    .iter()
                    .position(|x| *x == row[0])
                    .ok_or_else(|| Error::UnknownFeature(row[0].clone()))?;
                fi_sum[j] += parse_num(&row[1])?;
            }
            for row in Table::read(&udir.join("hyperparams.csv"))?.rows {
                hp.push(vec![a.clone(), f.to_string(), format!("{}={}", row[0], row[1])]);
            }
            seconds += parse_num(read_text(&udir.join("seconds.txt"))?.trim())?;
        }
        runtime.push(vec![a.clone(), format!("{seconds:.3}")]);
        let fi_mean: Vec<f64> = fi_sum.iter().map(|s| s / k as f64).collect();
        let mut t = Table::new(&["feature", "mean_importance"]);
        for (feat, v) in features.iter().zip(&fi_mean) {
            t.push(vec![feat.clone(), num(*v)]);
        }
        t.write(&dir.join(format!("permutation_fi_{a}.csv")))?;
        let weight = evals.iter().map(|(_, e)| e.metrics.get(cfg.metric_weight)).sum::<f64>() / k as f64;
        fi_inputs.push((fi_mean, weight));
        per_algorithm.push((a, evals));
    }
    hp.write(&dir.join("hyperparams.csv"))?;
    runtime.write(&dir.join("algorithm_runtime.csv"))?;
    write_evaluation_tables(&dir, &per_algorithm, cfg.sig_cutoff)?;
    let mut comp = Table::new(&["rank", "feature", "score"]);
    for (r, (feat, s)) in composite_fi(&features, &fi_inputs).into_iter().enumerate() {
        comp.push(vec![(r + 1).to_string(), feat, num(s)]);
    }
    comp.write(&dir.join(COMPOSITE_FI_FILE))
}

/// Cross-dataset comparison of phase 6 metric tables.
pub(super) fn phase7(exp: &Experiment) -> Result<()> {
    let cfg = &exp.config;
    let mut per_dataset = Vec::new();
    for d in &exp.datasets {
        let mut algs = Vec::new();
        for alg in &cfg.algorithms {
            let path = exp.phase_dir(&d.name, 6).join(metrics_file(alg.as_str()));
            algs.push((alg.as_str().to_string(), read_metric_table(&path)?));
        }
        per_dataset.push((d.name.clone(), algs));
    }
    let cmp = compare_datasets(&per_dataset, cfg.sig_cutoff)?;
    let dir = exp.comparison_dir();
    let mut winners = Table::new(&["metric", "dataset", "algorithm"]);
    for b in &cmp.best_algorithm {
        for (ds, alg) in &b.winners {
            winners.push(vec![b.comparison.metric.as_str().to_string(), ds.clone(), alg.clone()]);
        }
    }
    winners.write(&dir.join("best_algorithm_winners.csv"))?;
    let rows: Vec<(String, &_)> = cmp.best_algorithm.iter().map(|b| ("best".to_string(), &b.comparison)).collect();
    write_comparisons(&dir, "best_algorithm_", "scope", &rows, cfg.sig_cutoff)?;
    let rows: Vec<(String, &_)> = cmp
        .per_algorithm
        .iter()
        .flat_map(|(alg, cs)| cs.iter().map(move |c| (alg.clone(), c)))
        .collect();
    write_comparisons(&dir, "per_algorithm_", "algorithm", &rows, cfg.sig_cutoff)
}

/// Replication data through every fold's saved processing, then scoring of
/// every trained model.
pub(super) fn phase8(exp: &Experiment, scope: &str) -> Result<()> {
    let cfg = &exp.config;
    let (name, rep) = scope.split_once('/').expect("replication scope");
    let (_, path) = exp
        .replication_names()
        .into_iter()
        .find(|(n, _)| n == rep)
        .expect("scope was checked");
    let dir = exp.replication_dir(name, rep);
    let raw = load_delimited(&path, &cfg.outcome_label, cfg.instance_label.as_deref(), cfg.match_label.as_deref())?;
    let map = LabelMap::read_from(read_text(&exp.phase_dir(name, 1).join(LABEL_MAP_FILE))?.as_bytes())?;
    let schema = load_schema(exp, name)?;
    for f in &schema.input_features {
        if raw.column(&f.name).is_none() {
            return Err(Error::data(format!("replication data {rep} lacks required feature '{}'", f.name)));
        }
    }
    let typed = map.apply(&raw)?.apply_specs(&schema.input_features)?;
    write_eda(&dir, EDA_REPLICATION, "eda_replication_columns.csv", &summarize(&typed))?;

    let preps = (0..cfg.cv_partitions)
        .into_par_iter()
        .map(|f| {
            let t: FittedTransform = FittedTransform::from_json(&read_text(&transform_file(exp, name, f))?)?;
            let kept = read_features(exp, name, f)?;
            let prep = prepare_replication(&raw, &map, &schema, &t, &kept, f)?;
            prep.log.write_csv(create_file(&dir.join(format!("prep_log_{f}.csv")))?)?;
            save_dataset(&dir.join(format!("prepared_{f}.csv")), &prep.data)?;
            Ok(prep)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut models = Vec::new();
    for &alg in &cfg.algorithms {
        for f in 0..cfg.cv_partitions {
            models.push(load_model(exp, name, alg, f)?);
        }
    }
    let eval = evaluate_replication(&models, &preps, cfg.sig_cutoff)?;
    let mut per_algorithm: Vec<(String, Vec<(usize, Evaluation)>)> = Vec::new();
    for r in eval.records {
        match per_algorithm.iter_mut().find(|(a, _)| *a == r.algorithm) {
            Some((_, v)) => v.push((r.fold, r.evaluation)),
            None => per_algorithm.push((r.algorithm, vec![(r.fold, r.evaluation)])),
        }
    }
    write_evaluation_tables(&dir, &per_algorithm, cfg.sig_cutoff)?;
    Ok(())
}

pub(super) fn read_eda(path: &Path) -> Result<EdaSummary> {
    read_json(path)
}
