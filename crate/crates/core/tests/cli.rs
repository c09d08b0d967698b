use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "seed = 5\n\n[training]\nrestarts = 1\nmax_iter = 60\nmax_rows = 60\n";

fn hydrotwin(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydrotwin"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn simulate_is_reproducible_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&hydrotwin(&["simulate", "--seed", "3", "--out", "a"], d));
    ok(&hydrotwin(&["simulate", "--seed", "3", "--out", "b"], d));
    ok(&hydrotwin(&["simulate", "--seed", "4", "--out", "c"], d));
    for name in ["I", "II", "III", "IV", "V"] {
        let a = read(d.join("a").join(format!("{name}.csv")));
        assert_eq!(a, read(d.join("b").join(format!("{name}.csv"))), "{name}");
        assert_ne!(a, read(d.join("c").join(format!("{name}.csv"))), "{name}");
    }
}

#[test]
fn train_predict_evaluate_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("small.toml"), SMALL).unwrap();
    let cfg = ["--config", "small.toml"];
    let with = |extra: &[&str]| -> Vec<String> { cfg.iter().chain(extra).map(|s| s.to_string()).collect() };
    let run = |args: Vec<String>| hydrotwin(&args.iter().map(String::as_str).collect::<Vec<_>>(), d);

    ok(&run(with(&["simulate", "--out", "logs"])));
    ok(&run(with(&["featurize", "--out", "feat", "logs/IV.csv"])));
    let features = String::from_utf8(read(d.join("feat/IV_features.csv"))).unwrap();
    assert!(features.lines().count() > 100);

    ok(&run(with(&["train", "--data", "logs", "--out", "model"])));
    ok(&run(with(&["train", "--data", "logs", "--out", "again"])));
    assert_eq!(read(d.join("model/bundle.json")), read(d.join("again/bundle.json")));
    let report: serde_json::Value = serde_json::from_slice(&read(d.join("model/train_report.json"))).unwrap();
    assert_eq!(report["margins"].as_array().unwrap().len(), 3);

    ok(&run(with(&["predict", "--bundle", "model/bundle.json", "--out", "pred", "logs/V.csv"])));
    let pred = String::from_utf8(read(d.join("pred/V_predictions.csv"))).unwrap();
    assert!(pred.starts_with("time_s,p_work1_pa,p_work1_var_pa2,dir1,"));

    let eval = run(with(&["evaluate", "--bundle", "model/bundle.json", "--data", "logs", "--out", "eval"]));
    ok(&eval);
    let printed: serde_json::Value = serde_json::from_slice(&eval.stdout).unwrap();
    assert!(printed["pump_nrmse"].as_f64().unwrap().is_finite());
    for f in ["metrics.json", "IV_actuators.svg", "IV_pump.svg", "IV_series.csv", "V_pump.svg"] {
        assert!(d.join("eval").join(f).is_file(), "{f}");
    }
    ok(&run(with(&["evaluate", "--bundle", "model/bundle.json", "--data", "logs", "--out", "eval2", "--no-plots"])));
    assert_eq!(read(d.join("eval/metrics.json")), read(d.join("eval2/metrics.json")));
    assert!(!d.join("eval2/IV_pump.svg").exists());
}

#[test]
fn bad_config_exits_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("bad.toml"), "seed = 1\n\n[training]\nrestarts = 2\nbogus = 3\n").unwrap();
    let out = hydrotwin(&["--config", "bad.toml", "simulate"], d);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 5"), "{err}");

    std::fs::write(d.join("plant.toml"), "[plant]\nstandby = -1.0\n").unwrap();
    let out = hydrotwin(&["--config", "plant.toml", "simulate"], d);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_log_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("x.csv"), "time_s,theta1_rad\n0,0\n").unwrap();
    let out = hydrotwin(&["featurize", "x.csv"], d);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = hydrotwin(&["predict", "--bundle", "missing.json", "x.csv"], d);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
}
