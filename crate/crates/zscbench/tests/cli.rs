use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use zscbench::io::load_dataset;

fn zscbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zscbench")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SYNTH: &str = r#"{"version": 1, "base_seed": 11,
  "synth_spec": {"num_classes": 20, "attr_dim": 4, "feature_dim": 6, "samples_per_class": 8,
                 "noise_sigma": 0.2, "min_attr_separation": 0.3}}"#;

fn variability_config(models: &str, k: usize) -> String {
    format!(
        r#"{{"version": 1, "base_seed": 5,
  "synth_spec": {{"num_classes": 12, "attr_dim": 4, "feature_dim": 6, "samples_per_class": 10,
                 "noise_sigma": 0.3, "min_attr_separation": 0.3}},
  "models": {models},
  "protocol": {{"kind": "variability", "num_partitions": {k}, "test_class_count": 3}}}}"#
    )
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn synth_writes_loadable_deterministic_directory() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "synth.json", SYNTH);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = zscbench(&["synth", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let d = load_dataset(&a).unwrap();
    assert_eq!(d.num_classes(), 20);
    assert_eq!(d.num_samples(), 160);
    assert_eq!(d.class_names().unwrap()[3], "class_003");
    assert_eq!(fs::read(a.join("features.csv")).unwrap(), fs::read(b.join("features.csv")).unwrap());

    let c = tmp.path().join("c");
    assert!(zscbench(&["--seed", "12", "synth", "--config", &cfg, "--out", c.to_str().unwrap()]).status.success());
    assert_ne!(fs::read(a.join("features.csv")).unwrap(), fs::read(c.join("features.csv")).unwrap());
}

#[test]
fn invalid_configs_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let bad_spec = write_config(tmp.path(), "bad.json", &SYNTH.replace("\"num_classes\": 20", "\"num_classes\": 3"));
    let o = zscbench(&["synth", "--config", &bad_spec, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!o.stderr.is_empty());

    let garbage = write_config(tmp.path(), "garbage.json", "{ not json");
    assert_eq!(zscbench(&["variability", "--config", &garbage, "--out", "x"]).status.code(), Some(2));
    assert_eq!(zscbench(&["variability", "--config", "/nonexistent.json", "--out", "x"]).status.code(), Some(2));

    let no_out = write_config(tmp.path(), "v.json", &variability_config(r#"[{"name": "eszsl"}]"#, 2));
    assert_eq!(zscbench(&["variability", "--config", &no_out]).status.code(), Some(2));
    assert_eq!(zscbench(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn runtime_failures_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "missing.json",
        r#"{"version": 1, "dataset_path": "no_such_dir", "models": [{"name": "eszsl"}],
            "protocol": {"kind": "variability", "num_partitions": 3, "test_class_count": 2}}"#,
    );
    let o = zscbench(&["variability", "--config", &cfg, "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("meta.json"));
}

#[test]
fn single_model_variability_has_no_tests_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "v.json", &variability_config(r#"[{"name": "eszsl"}]"#, 2));
    let out = tmp.path().join("out");
    let o = zscbench(&["variability", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(csv_rows(&out.join("records.csv")).len(), 2);
    assert_eq!(csv_rows(&out.join("summary.csv")).len(), 2);
    assert!(!out.join("tests.csv").exists());
}

#[test]
fn variability_outputs_are_consistent_and_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let models = r#"[{"name": "eszsl"}, {"name": "sje", "epochs": 10}, {"name": "eszsl", "gamma": 0.1, "lambda": 0.1, "label": "eszsl_small"}]"#;
    let cfg = write_config(tmp.path(), "v.json", &variability_config(models, 7));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = zscbench(&["--workers", "1", "variability", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Avg. per-class acc.") && stdout.contains("p-value eszsl vs sje"), "{stdout}");
    assert!(zscbench(&["--workers", "3", "variability", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    for f in ["records.csv", "summary.csv", "tests.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }

    let records = csv_rows(&a.join("records.csv"));
    assert_eq!(records.len(), 7 * 3);
    for row in csv_rows(&a.join("summary.csv")) {
        let col = if row[1] == "accuracy" { 2 } else { 3 };
        let values: Vec<f64> = records.iter().filter(|r| r[1] == row[0]).map(|r| r[col].parse().unwrap()).collect();
        let (mean, std) = zsc_core::mean_std(&values).unwrap();
        assert!((mean - row[2].parse::<f64>().unwrap()).abs() <= 1e-12);
        assert!((std - row[3].parse::<f64>().unwrap()).abs() <= 1e-12);
    }
    // 3 model pairs × 2 metrics, minus any pair whose differences are all zero
    let tests = csv_rows(&a.join("tests.csv"));
    assert!(!tests.is_empty() && tests.len() <= 6);
    for t in &tests {
        let p: f64 = t[4].parse().unwrap();
        assert!(p > 0.0 && p <= 1.0);
        assert_eq!(t[6], "exact");
    }
}

#[test]
fn saved_models_reload() {
    let tmp = tempfile::tempdir().unwrap();
    let body = variability_config(r#"[{"name": "sje", "epochs": 3}]"#, 2)
        .replace("\"version\": 1,", "\"version\": 1, \"save_models\": true,");
    let cfg = write_config(tmp.path(), "v.json", &body);
    let out = tmp.path().join("out");
    assert!(zscbench(&["variability", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let (model, meta) = zscbench::io::load_model(&out.join("models/partition_001/sje")).unwrap();
    assert_eq!(model.feature_dim(), 6);
    assert_eq!(meta.trained_classes.len(), 9);
    assert_eq!(meta.params["epochs"], 3);
}

#[test]
fn ensemble_rows_and_summary() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.json",
        r#"{"version": 1, "base_seed": 3,
            "synth_spec": {"num_classes": 12, "attr_dim": 4, "feature_dim": 6, "samples_per_class": 6,
                           "noise_sigma": 0.3, "min_attr_separation": 0.3},
            "protocol": {"kind": "ensemble", "base_model": {"name": "eszsl"}, "test_class_count": 3,
                         "n_list": [1, 5], "s_list": [0.5, 1.0], "repeats": 3, "voting": "hard",
                         "metric": "accuracy"}}"#,
    );
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let o = zscbench(&["ensemble", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("Hard ensemble, accuracy"));
    assert!(zscbench(&["--workers", "2", "ensemble", "--config", &cfg, "--out", b.to_str().unwrap()]).status.success());
    for f in ["ensemble.csv", "ensemble_summary.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let rows = csv_rows(&a.join("ensemble.csv"));
    assert_eq!(rows.len(), 2 * 2 * 3);
    for r in rows.iter().filter(|r| r[1].parse::<f64>().unwrap() == 1.0) {
        assert_eq!(r[3], r[4], "s = 1 ESZSL member equals the baseline");
    }
    let summary = csv_rows(&a.join("ensemble_summary.csv"));
    assert_eq!(summary.len(), 4);
    for c in summary {
        let values: Vec<f64> =
            rows.iter().filter(|r| r[0] == c[0] && r[1] == c[1]).map(|r| r[3].parse().unwrap()).collect();
        let (mean, std) = zsc_core::mean_std(&values).unwrap();
        assert!((mean - c[2].parse::<f64>().unwrap()).abs() <= 1e-12);
        assert!((std - c[3].parse::<f64>().unwrap()).abs() <= 1e-12);
    }
}
