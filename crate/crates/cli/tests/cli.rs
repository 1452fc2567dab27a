use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn automl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_automl"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn simulate_then_run_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    let sim = automl(dir, &["simulate", "multiplexer", "bits=6, instances=120", "-o", "mux.csv"]);
    assert_eq!(code(&sim), 0, "{}", String::from_utf8_lossy(&sim.stderr));
    assert!(fs::read_to_string(dir.join("mux.params.txt")).unwrap().contains("instances=120"));

    fs::write(
        dir.join("run.cfg"),
        "datasets = mux.csv\ninstance_label = instance_id\ncv_partitions = 3\nn_trials = 5\nalgorithms = NB, DT\n",
    )
    .unwrap();
    let run = automl(dir, &["run", "-c", "run.cfg", "--set", "n_trials=2", "--experiment-path", "out"]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    assert!(fs::read_to_string(dir.join("out/config.txt")).unwrap().contains("n_trials = 2"));

    let report = automl(dir, &["report", "-c", "run.cfg", "--set", "n_trials=2", "--experiment-path", "out"]);
    assert_eq!(code(&report), 0);
    assert!(String::from_utf8_lossy(&report.stdout).trim().ends_with("report.txt"));

    let phase = automl(dir, &["phase", "5", "-c", "run.cfg", "--experiment-path", "out", "--fold", "1", "--algorithm", "DT"]);
    assert_eq!(code(&phase), 3, "n_trials=5 makes upstream phases stale");
}

#[test]
fn exit_codes_distinguish_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&automl(dir, &["run", "--set", "n_trials"])), 2);
    assert_eq!(code(&automl(dir, &["run", "--set", "bogus=1"])), 2);
    assert_eq!(code(&automl(dir, &["simulate", "nonsense"])), 2);
    assert_eq!(code(&automl(dir, &["run", "-c", "missing.cfg"])), 2);

    automl(dir, &["simulate", "xor", "features=5, instances=80", "-o", "x.csv"]);
    let set = ["--set", "datasets=x.csv", "--set", "instance_label=instance_id"];
    assert_eq!(code(&automl(dir, &[&["phase", "4"][..], &set].concat())), 3);

    fs::write(dir.join("broken.csv"), "instance_id,a,Class\n1,0.5,3\n2,0.1,0\n").unwrap();
    let broken = ["--set", "datasets=broken.csv", "--set", "instance_label=instance_id"];
    assert_eq!(code(&automl(dir, &[&["phase", "1"][..], &broken].concat())), 1);
}
