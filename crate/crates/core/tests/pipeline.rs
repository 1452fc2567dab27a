use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use automl_core::data::Config;
use automl_core::error::Error;
use automl_core::pipeline::store::{read_marker, Table};
use automl_core::pipeline::{Experiment, Filter, EXPERIMENT_SCOPE};
use automl_core::simgen::{generate, parse_params, write_simulation};

fn simulate(dir: &Path, file: &str, generator: &str, params: &str) -> PathBuf {
    let (ds, resolved) = generate(generator, &parse_params(params).unwrap()).unwrap();
    let path = dir.join(file);
    write_simulation(&ds, &resolved, &path).unwrap();
    path
}

fn small_config(dir: &Path) -> Config {
    let mut cfg = Config::default();
    cfg.experiment_path = dir.join("exp");
    cfg.instance_label = Some("instance_id".to_string());
    cfg.datasets = vec![
        simulate(dir, "mux.csv", "multiplexer", "bits=6, instances=150, seed=3"),
        simulate(dir, "xor.csv", "xor", "order=2, features=6, instances=150, seed=4"),
    ];
    cfg.replication_data = vec![simulate(dir, "mux_rep.csv", "multiplexer", "bits=6, instances=90, seed=8")];
    cfg.dataset_for_rep = Some("mux".to_string());
    cfg.cv_partitions = 3;
    cfg.n_trials = 2;
    cfg.permutation_repeats = 2;
    cfg.algorithms = vec!["NB".parse().unwrap(), "DT".parse().unwrap()];
    cfg
}

/// Every file below `dir`, keyed by relative path.
fn snapshot(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(dir: &Path, base: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(&p, base, out);
            } else {
                out.insert(p.strip_prefix(base).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(dir, dir, &mut out);
    out
}

#[test]
fn full_run_writes_every_stage_and_resumes() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = Experiment::new(small_config(tmp.path())).unwrap();
    exp.run().unwrap();

    let root = &exp.root;
    for ds in ["mux", "xor"] {
        for phase in 1..=6 {
            assert!(exp.is_current(phase, ds), "phase {phase} of {ds}");
        }
        assert!(root.join(ds).join("phase6/composite_fi.csv").is_file());
        assert!(root.join(ds).join("phase5/DT/fold2/model.json").is_file());
    }
    assert!(exp.is_current(7, EXPERIMENT_SCOPE));
    assert!(exp.is_current(8, "mux/mux_rep"));
    assert!(root.join("comparison/best_algorithm_winners.csv").is_file());
    assert!(root.join("mux/replication/mux_rep/metrics_NB.csv").is_file());
    let report = fs::read_to_string(root.join("summary/report.txt")).unwrap();
    assert!(report.contains("n_trials = 2"), "config echo");
    assert!(report.contains("dataset comparison"));
    assert!(root.join("summary/replication_report.txt").is_file());
    assert_eq!(fs::read_to_string(root.join("layout_version.txt")).unwrap().trim(), "1");

    // 6 phases for 2 datasets plus comparison, replication and report
    let runtime = Table::read(&root.join("runtime.csv")).unwrap();
    assert_eq!(runtime.rows.len(), 15);

    let before: Vec<_> = (1..=6).map(|p| read_marker(&exp.phase_dir("mux", p)).unwrap()).collect();
    exp.run().unwrap();
    let after: Vec<_> = (1..=6).map(|p| read_marker(&exp.phase_dir("mux", p)).unwrap()).collect();
    assert_eq!(before, after, "current phases are skipped");

    // tampering with an artifact invalidates its phase and everything below
    let fi = exp.phase_dir("mux", 3).join("multisurf_0.csv");
    fs::write(&fi, "feature,score\n").unwrap();
    assert!(!exp.is_current(3, "mux"));
    assert!(exp.is_current(2, "mux"));
    exp.run().unwrap();
    assert!((1..=6).all(|p| exp.is_current(p, "mux")));
}

#[test]
fn rerunning_statistics_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.datasets.truncate(1);
    cfg.replication_data.clear();
    cfg.dataset_for_rep = None;
    let exp = Experiment::new(cfg).unwrap();
    exp.run().unwrap();
    let dir = exp.phase_dir("mux", 6);
    let strip = |mut s: BTreeMap<PathBuf, Vec<u8>>| {
        s.remove(Path::new("phase_complete.json"));
        s
    };
    let first = strip(snapshot(&dir));
    exp.run_phase(6, &Filter::default()).unwrap();
    assert_eq!(first, strip(snapshot(&dir)));
}

#[test]
fn phases_out_of_order_are_prerequisite_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = Experiment::new(small_config(tmp.path())).unwrap();
    exp.run_phase(1, &Filter::default()).unwrap();
    let err = exp.run_phase(5, &Filter::default()).unwrap_err();
    assert!(matches!(err, Error::Prerequisite(_)), "{err}");
    assert!(matches!(exp.run_phase(9, &Filter::default()), Err(Error::Prerequisite(_))));
}

#[test]
fn fold_filter_runs_only_that_fold() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = Experiment::new(small_config(tmp.path())).unwrap();
    let ds = Filter {
        dataset: Some("mux".to_string()),
        ..Filter::default()
    };
    exp.run_phase(1, &ds).unwrap();
    exp.run_phase(2, &Filter { fold: Some(1), ..ds.clone() }).unwrap();
    let dir = exp.phase_dir("mux", 2);
    assert!(dir.join("train_1.csv").is_file());
    assert!(!dir.join("train_0.csv").exists());
    assert!(!exp.phase_dir("xor", 1).exists());
}

#[test]
fn bad_configuration_reports_every_problem() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.datasets.push(tmp.path().join("absent.csv"));
    cfg.dataset_for_rep = Some("nope".to_string());
    match Experiment::new(cfg) {
        Err(Error::Config(problems)) => assert_eq!(problems.len(), 2, "{problems:?}"),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn overrides_apply_on_top_of_the_file() {
    let tmp = tempfile::tempdir().unwrap();
    let data = simulate(tmp.path(), "mux.csv", "multiplexer", "instances=60");
    let file = tmp.path().join("run.cfg");
    fs::write(&file, format!("datasets = {}\nn_trials = 9\n", data.display())).unwrap();
    let exp = Experiment::from_file(&file, &[("n_trials".to_string(), "4".to_string())]).unwrap();
    assert_eq!(exp.config.n_trials, 4);
    let bad = Experiment::from_file(&file, &[("no_such_key".to_string(), "1".to_string())]);
    assert!(matches!(bad, Err(Error::Config(_))));
}

#[test]
fn reserved_column_names_are_config_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(tmp.path());
    cfg.instance_label = None;
    let exp = Experiment::new(cfg).unwrap();
    assert!(matches!(exp.run_phase(1, &Filter::default()), Err(Error::Config(_))));
}
