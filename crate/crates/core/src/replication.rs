//! Hold-out replication: push external data through each fold's saved
//! processing and transforms, then score every trained model on it.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, LabelMap};
use crate::error::{Error, Result};
use crate::metrics::{average_curves, evaluate, AveragedCurve, Evaluation, MetricVector};
use crate::models::{ModelData, TrainedModel};
use crate::processing::{ProcessingLog, ProcessingSchema};
use crate::stats::{compare_algorithms, GroupComparison};
use crate::transform::FittedTransform;

/// Replication data prepared for one fold's models.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationPrep {
    pub fold: usize,
    /// Imputed and scaled, restricted to the fold's model features.
    pub data: Dataset,
    pub log: ProcessingLog,
}

/// Encodes text with the training label map, replays the processing schema,
/// applies the fold's imputer and scaler and keeps the fold's features.
///
/// The transform runs before the feature restriction because it was fitted
/// on the full processed feature set.
pub fn prepare_replication(
    raw: &Dataset,
    label_map: &LabelMap,
    schema: &ProcessingSchema,
    transform: &FittedTransform,
    kept_features: &[String],
    fold: usize,
) -> Result<ReplicationPrep> {
    for f in &schema.input_features {
        if raw.column(&f.name).is_none() {
            return Err(Error::data(format!("replication data lacks required feature '{}'", f.name)));
        }
    }
    let encoded = label_map.apply(raw)?;
    let (processed, log) = schema.replay(&encoded)?;
    let transformed = transform.apply(&processed)?;
    let data = transformed.select_columns(kept_features)?;
    Ok(ReplicationPrep { fold, data, log })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub algorithm: String,
    pub fold: usize,
    pub evaluation: Evaluation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationEvaluation {
    /// In input model order.
    pub records: Vec<ReplicationRecord>,
    /// Per algorithm, in first-seen order: averaged ROC and PRC.
    pub curves: Vec<(String, AveragedCurve, AveragedCurve)>,
    pub comparisons: Vec<GroupComparison>,
}

impl ReplicationEvaluation {
    /// Fold metric vectors grouped by algorithm, in first-seen order.
    pub fn per_algorithm(&self) -> Vec<(String, Vec<MetricVector>)> {
        let mut out: Vec<(String, Vec<MetricVector>)> = Vec::new();
        for r in &self.records {
            match out.iter_mut().find(|(a, _)| *a == r.algorithm) {
                Some((_, v)) => v.push(r.evaluation.metrics.clone()),
                None => out.push((r.algorithm.clone(), vec![r.evaluation.metrics.clone()])),
            }
        }
        out
    }
}

/// Scores each model on the prep for its fold. Models without a fold index
/// or without a matching prep are errors.
pub fn evaluate_replication(
    models: &[TrainedModel],
    preps: &[ReplicationPrep],
    sig_cutoff: f64,
) -> Result<ReplicationEvaluation> {
    let mut records = Vec::with_capacity(models.len());
    for m in models {
        let fold = m
            .fold
            .ok_or_else(|| Error::data(format!("{} model has no fold index", m.algorithm)))?;
        let prep = preps
            .iter()
            .find(|p| p.fold == fold)
            .ok_or_else(|| Error::Prerequisite(format!("no replication prep for fold {fold}")))?;
        let data = ModelData::from_dataset(&prep.data)?;
        let probs = m.predict_proba(&data)?;
        records.push(ReplicationRecord {
            algorithm: m.algorithm.as_str().to_string(),
            fold,
            evaluation: evaluate(&data.y, &probs)?,
        });
    }
    let mut eval = ReplicationEvaluation {
        records,
        curves: Vec::new(),
        comparisons: Vec::new(),
    };
    let algorithms: Vec<String> = eval.per_algorithm().into_iter().map(|(a, _)| a).collect();
    for alg in algorithms {
        let mine: Vec<&ReplicationRecord> = eval.records.iter().filter(|r| r.algorithm == alg).collect();
        let roc: Vec<Vec<(f64, f64)>> = mine.iter().map(|r| r.evaluation.roc.clone()).collect();
        let prc: Vec<Vec<(f64, f64)>> = mine.iter().map(|r| r.evaluation.prc.clone()).collect();
        eval.curves.push((alg, average_curves(&roc), average_curves(&prc)));
    }
    eval.comparisons = compare_algorithms(&eval.per_algorithm(), sig_cutoff)?;
    Ok(eval)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{encode_text_labels, infer_feature_types, Config};
    use crate::models::{fit, AlgorithmId, Hyperparams};
    use crate::processing::{one_hot_name, process};
    use crate::simgen::{hcc_like_custom, hcc_like_replication, REPLICATION_NO_OUTCOME};
    use crate::transform::TransformOptions;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    struct Trained {
        map: LabelMap,
        schema: ProcessingSchema,
        processed: Dataset,
        transform: FittedTransform,
    }

    fn train() -> Trained {
        let (enc, map) = encode_text_labels(&hcc_like_custom(42));
        let typed = infer_feature_types(&enc, 10, &Default::default(), &Default::default()).unwrap();
        let cfg = Config {
            ignore_features: vec!["Gender".into(), "Age".into()],
            ..Config::default()
        };
        let p = process(&typed, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let transform = FittedTransform::fit(&p.data, TransformOptions::default(), Some(0)).unwrap();
        Trained {
            map,
            schema: p.schema,
            processed: p.data,
            transform,
        }
    }

    #[test]
    fn replication_rows_are_cleaned_and_aligned() {
        let t = train();
        let kept = t.processed.feature_names();
        let prep = prepare_replication(&hcc_like_replication(42), &t.map, &t.schema, &t.transform, &kept, 0).unwrap();
        let removed = &prep.log.entries[0].removed_instances;
        assert_eq!(removed.len(), REPLICATION_NO_OUTCOME);
        assert_eq!(prep.data.feature_names(), kept);
        assert!(!prep.data.has_missing());

        // The unseen-levels row: all children of a one-hot parent are zero
        // before scaling, so after scaling they equal -mean/scale.
        let row = prep.data.instance_ids.iter().position(|id| id == "rep_unseen_levels").unwrap();
        for spec in t.schema.one_hot.iter().filter(|s| s.parent == "sim_cat_text_3" || s.parent == "sim_cat_num_3") {
            for &level in &spec.levels {
                let name = one_hot_name(&spec.parent, level);
                let j = t.transform.features.iter().position(|f| *f == name).unwrap();
                let v = prep.data.column(&name).unwrap().values().unwrap()[row].unwrap();
                let zero = (0.0 - t.transform.means[j]) / t.transform.scales[j];
                assert!((v - zero).abs() < 1e-12, "{name}");
            }
        }
    }

    #[test]
    fn training_rows_replay_to_training_partition() {
        let t = train();
        let raw = hcc_like_custom(42);
        let kept = t.processed.feature_names();
        let prep = prepare_replication(&raw, &t.map, &t.schema, &t.transform, &kept, 0).unwrap();
        assert_eq!(prep.data, t.transform.apply(&t.processed).unwrap());
        let again = prepare_replication(&raw, &t.map, &t.schema, &t.transform, &kept, 0).unwrap();
        assert_eq!(prep, again);
    }

    #[test]
    fn missing_feature_is_an_error() {
        let t = train();
        let mut raw = hcc_like_replication(42);
        raw.columns.retain(|c| c.name != "Quant3");
        let kept = t.processed.feature_names();
        assert!(prepare_replication(&raw, &t.map, &t.schema, &t.transform, &kept, 0).is_err());
    }

    #[test]
    fn transform_is_not_refitted() {
        let t = train();
        let before = t.transform.to_json().unwrap();
        let kept = t.processed.feature_names();
        prepare_replication(&hcc_like_replication(42), &t.map, &t.schema, &t.transform, &kept, 0).unwrap();
        assert_eq!(before, t.transform.to_json().unwrap());
    }

    #[test]
    fn evaluation_records_per_model() {
        let t = train();
        let kept: Vec<String> = t.processed.feature_names().into_iter().take(12).collect();
        let train_data = ModelData::from_dataset(&t.transform.apply(&t.processed).unwrap().select_columns(&kept).unwrap()).unwrap();
        let prep = prepare_replication(&hcc_like_replication(42), &t.map, &t.schema, &t.transform, &kept, 0).unwrap();
        let mut models = Vec::new();
        for alg in [AlgorithmId::NaiveBayes, AlgorithmId::DecisionTree] {
            let mut m = fit(alg, &train_data, &Hyperparams::new(), 3).unwrap();
            m.fold = Some(0);
            models.push(m.clone());
            models.push(m);
        }
        let eval = evaluate_replication(&models, std::slice::from_ref(&prep), 0.05).unwrap();
        assert_eq!(eval.records.len(), 4);
        assert_eq!(eval.records[0], eval.records[1]);
        assert_eq!(eval.curves.len(), 2);
        assert_eq!(eval.comparisons.len(), 16);

        let one = evaluate_replication(&models[..1], std::slice::from_ref(&prep), 0.05).unwrap();
        assert_eq!(one.records.len(), 1);
        assert!(one.comparisons.is_empty());

        models[0].fold = Some(3);
        assert!(evaluate_replication(&models, &[prep], 0.05).is_err());
    }
}
