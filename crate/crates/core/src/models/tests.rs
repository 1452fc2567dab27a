use super::*;
use ndarray::{array, Array2};
use proptest::prelude::*;
use rand::Rng;

fn quant(names: usize) -> Vec<FeatureKind> {
    vec![FeatureKind::Quantitative; names]
}

fn named(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("f{j}")).collect()
}

fn xor_truth_table() -> ModelData {
    ModelData::new(
        named(2),
        vec![FeatureKind::Categorical; 2],
        array![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]],
        vec![0, 1, 1, 0],
    )
}

fn random_data(n: usize, p: usize, seed: u64) -> ModelData {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-1.0..1.0));
    let y = (0..n)
        .map(|i| u8::from(x[[i, 0]] + 0.5 * rng.random_range(-1.0..1.0) > 0.0))
        .collect();
    ModelData::new(named(p), quant(p), x, y)
}

fn hp(pairs: &[(&str, ParamValue)]) -> Hyperparams {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn accuracy(m: &TrainedModel, d: &ModelData) -> f64 {
    let p = m.predict_proba(d).unwrap();
    p.iter().zip(&d.y).filter(|(p, &y)| (**p >= 0.5) == (y == 1)).count() as f64 / d.n() as f64
}

#[test]
fn decision_tree_shatters_xor_truth_table() {
    let d = xor_truth_table();
    let m = fit(AlgorithmId::DecisionTree, &d, &hp(&[("max_depth", ParamValue::Int(2))]), 0).unwrap();
    assert_eq!(accuracy(&m, &d), 1.0);
}

#[test]
fn naive_bayes_separated_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 200;
    let x = Array2::from_shape_fn((n, 2), |(i, _)| {
        let c = if i < n / 2 { -5.0 } else { 5.0 };
        c + rng.random_range(-1.0..1.0)
    });
    let y = (0..n).map(|i| u8::from(i >= n / 2)).collect();
    let d = ModelData::new(named(2), quant(2), x, y);
    let m = fit(AlgorithmId::NaiveBayes, &d, &Hyperparams::new(), 0).unwrap();
    let centers = ModelData::new(named(2), quant(2), array![[-5.0, -5.0], [5.0, 5.0]], vec![0, 1]);
    let p = m.predict_proba(&centers).unwrap();
    assert!(p[0] < 0.01 && p[1] > 0.99, "{p:?}");
}

#[test]
fn naive_bayes_categorical_add_one() {
    let d = ModelData::new(
        named(1),
        vec![FeatureKind::Categorical],
        array![[0.0], [0.0], [0.0], [1.0]],
        vec![1, 1, 0, 0],
    );
    let m = fit(AlgorithmId::NaiveBayes, &d, &Hyperparams::new(), 0).unwrap();
    // p(x=0|1) = 3/4, p(x=0|0) = 2/4; balanced priors.
    let p = m.predict_proba(&ModelData::new(named(1), vec![FeatureKind::Categorical], array![[0.0]], vec![1])).unwrap();
    assert!((p[0] - 0.75 / 1.25).abs() < 1e-12);
}

#[test]
fn single_class_training_is_an_error() {
    let d = ModelData::new(named(1), quant(1), array![[0.0], [1.0]], vec![1, 1]);
    for kind in AlgorithmId::ALL {
        assert!(fit(kind, &d, &Hyperparams::new(), 0).is_err());
    }
}

#[test]
fn forest_of_one_full_tree_equals_decision_tree() {
    let d = random_data(120, 5, 9);
    let tree_hp = hp(&[
        ("max_depth", ParamValue::Int(6)),
        ("min_samples_split", ParamValue::Int(4)),
        ("min_samples_leaf", ParamValue::Int(2)),
    ]);
    let mut forest_hp = tree_hp.clone();
    forest_hp.insert("n_estimators".into(), ParamValue::Int(1));
    forest_hp.insert("max_features".into(), ParamValue::Text("all".into()));
    forest_hp.insert("bootstrap".into(), ParamValue::Text("false".into()));
    let dt = fit(AlgorithmId::DecisionTree, &d, &tree_hp, 3).unwrap();
    let rf = fit(AlgorithmId::RandomForest, &d, &forest_hp, 3).unwrap();
    let probe = random_data(80, 5, 10);
    assert_eq!(dt.predict_proba(&probe).unwrap(), rf.predict_proba(&probe).unwrap());
}

#[test]
fn boosting_loss_never_increases() {
    for seed in 0..5 {
        let d = random_data(150, 4, seed);
        for lr in [0.01, 0.1, 0.5] {
            let params = ensemble::BoostParams {
                n_estimators: 40,
                learning_rate: lr,
                tree: tree::TreeParams {
                    max_depth: 3,
                    min_samples_split: 2,
                    min_samples_leaf: 1,
                    max_features: None,
                },
            };
            let (_, losses) = GradientBoostedTrees::fit_traced(&d.x, &d.y, &params);
            for w in losses.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "seed {seed} lr {lr}: {} -> {}", w[0], w[1]);
            }
        }
    }
}

#[test]
fn knn_one_neighbour_memorises_training_data() {
    let d = random_data(60, 3, 11);
    let m = fit(AlgorithmId::KNearestNeighbors, &d, &hp(&[("n_neighbors", ParamValue::Int(1))]), 0).unwrap();
    assert_eq!(accuracy(&m, &d), 1.0);
}

#[test]
fn model_json_round_trip() {
    let d = random_data(50, 3, 12);
    for kind in AlgorithmId::ALL {
        let m = fit(kind, &d, &Hyperparams::new(), 1).unwrap();
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back.predict_proba(&d).unwrap(), m.predict_proba(&d).unwrap(), "{kind}");
    }
}

#[test]
fn feature_list_mismatch_is_rejected() {
    let d = random_data(30, 3, 13);
    let m = fit(AlgorithmId::NaiveBayes, &d, &Hyperparams::new(), 0).unwrap();
    let mut other = d.clone();
    other.names[1] = "zzz".into();
    assert!(m.predict_proba(&other).is_err());
}

#[test]
fn single_point_space_runs_one_trial() {
    let d = random_data(60, 2, 14);
    let opts = SearchOptions {
        n_trials: 50,
        timeout: None,
        inner_folds: 3,
        metric: MetricId::BalancedAccuracy,
        seed: 1,
    };
    let r = hyperparameter_search(AlgorithmId::NaiveBayes, &d, &HyperparamSpace::default_for(AlgorithmId::NaiveBayes), &opts)
        .unwrap();
    assert_eq!(r.trials.len(), 1);
    assert!(hyperparameter_search(
        AlgorithmId::NaiveBayes,
        &d,
        &HyperparamSpace { params: vec![] },
        &opts
    )
    .is_err());
}

#[test]
fn search_is_deterministic() {
    let d = random_data(90, 3, 15);
    let opts = SearchOptions {
        n_trials: 12,
        timeout: None,
        inner_folds: 3,
        metric: MetricId::BalancedAccuracy,
        seed: 7,
    };
    let space = HyperparamSpace::default_for(AlgorithmId::RandomForest);
    let a = hyperparameter_search(AlgorithmId::RandomForest, &d, &space, &opts).unwrap();
    let b = hyperparameter_search(AlgorithmId::RandomForest, &d, &space, &opts).unwrap();
    assert_eq!(a, b);
    let best = a.trials.iter().map(|t| t.score).fold(f64::NEG_INFINITY, f64::max);
    let first_best = a.trials.iter().find(|t| t.score == best).unwrap();
    assert_eq!(first_best.params, a.best);
}

#[test]
fn depth_one_cannot_solve_xor() {
    // Replicated truth table: inner folds still see every corner.
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for _ in 0..15 {
        for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)] {
            rows.push([a, b]);
            y.push(u8::from(a != b));
        }
    }
    let x = Array2::from_shape_fn((rows.len(), 2), |(i, j)| rows[i][j]);
    let d = ModelData::new(named(2), vec![FeatureKind::Categorical; 2], x, y);
    let space = HyperparamSpace {
        params: vec![("max_depth".into(), ParamDomain::Int { lo: 1, hi: 6 })],
    };
    let opts = SearchOptions {
        n_trials: 30,
        timeout: None,
        inner_folds: 3,
        metric: MetricId::BalancedAccuracy,
        seed: 3,
    };
    let r = hyperparameter_search(AlgorithmId::DecisionTree, &d, &space, &opts).unwrap();
    for t in &r.trials {
        if t.params["max_depth"] == ParamValue::Int(1) {
            assert!(t.score <= 0.5 + 1e-12);
        }
    }
    assert!(matches!(r.best["max_depth"], ParamValue::Int(k) if k >= 2));
}

#[test]
fn permutation_importance_contracts() {
    let d = random_data(200, 3, 16);
    let m = fit(
        AlgorithmId::LogisticRegressionElasticNet,
        &d,
        &hp(&[("alpha", ParamValue::Real(0.05)), ("l1_ratio", ParamValue::Real(1.0))]),
        0,
    )
    .unwrap();
    let scores = permutation_importance(&m, &d, &d.names, MetricId::BalancedAccuracy, 5, 1).unwrap();
    let FittedModel::Logistic(lr) = &m.model else { unreachable!() };
    for (s, w) in scores.iter().zip(&lr.weights) {
        if *w == 0.0 {
            assert_eq!(*s, 0.0);
        }
    }
    assert!(scores[0] > 0.2);
    assert!(permutation_importance(&m, &d, &["nope".to_string()], MetricId::BalancedAccuracy, 1, 0).is_err());
}

#[test]
fn permuting_a_perfect_threshold_feature() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let n = 2000;
    let x = Array2::from_shape_fn((n, 1), |_| rng.random_range(-1.0..1.0));
    let y = (0..n).map(|i| u8::from(x[[i, 0]] > 0.0)).collect();
    let d = ModelData::new(named(1), quant(1), x, y);
    let m = fit(AlgorithmId::DecisionTree, &d, &hp(&[("max_depth", ParamValue::Int(1))]), 0).unwrap();
    let s = permutation_importance(&m, &d, &d.names, MetricId::BalancedAccuracy, 5, 2).unwrap();
    assert!((s[0] - 0.5).abs() < 0.05, "{}", s[0]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn probabilities_are_valid(seed in 0u64..500, kind_idx in 0usize..6) {
        let kind = AlgorithmId::ALL[kind_idx];
        let d = random_data(40, 3, seed);
        prop_assume!(d.y.iter().any(|&v| v == 1) && d.y.iter().any(|&v| v == 0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = HyperparamSpace::default_for(kind).sample(&mut rng);
        let m = fit(kind, &d, &params, seed).unwrap();
        for p in m.predict_proba(&random_data(20, 3, seed + 1)).unwrap() {
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(((1.0 - p) + p - 1.0).abs() <= 1e-12);
        }
        let again = fit(kind, &d, &params, seed).unwrap();
        prop_assert_eq!(again, m);
    }
}
