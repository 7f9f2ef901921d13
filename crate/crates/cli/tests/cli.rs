//! Black-box tests of the binary: exit codes, artifact contracts, error
//! messages.

use std::path::Path;
use std::process::{Command, Output};

fn varqfs(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_varqfs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path) {
    std::fs::write(
        dir.join("cfg.toml"),
        r#"
            data = "german.synth"
            feature_mode = "first:5"
            depth = 1
            master_seed = 5
            out_dir = "out"
            [optimizer]
            iterations = 8
            shots = 128
            seeds = 1
            analysis_shots = 400
            initial_sigma_repeats = 10
            [analysis]
            bootstraps = 8
            paired_trials = 12
            top_k = 3
            qubo_n = 4
        "#,
    )
    .unwrap();
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let out = varqfs(dir.path(), &["synth", "--rows", "150", "--seed", "9", "--out", "german.synth"]);
    assert!(out.status.success());
    write_config(dir.path());
    dir
}

#[test]
fn bad_flags_exit_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = varqfs(dir.path(), &["train", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));

    let out = varqfs(dir.path(), &["ingest", "--feature-mode", "bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage error"));
}

#[test]
fn missing_data_file_exits_with_data_code() {
    let dir = tempfile::tempdir().unwrap();
    write_config(dir.path()); // german.synth never created
    let out = varqfs(dir.path(), &["ingest", "-c", "cfg.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("data error"));
}

#[test]
fn corrupt_data_file_exits_with_line_number() {
    let dir = setup();
    let mut text = std::fs::read_to_string(dir.path().join("german.synth")).unwrap();
    text.push_str("A11 truncated\n");
    std::fs::write(dir.path().join("german.synth"), text).unwrap();
    let out = varqfs(dir.path(), &["ingest", "-c", "cfg.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 151"));
}

#[test]
fn ingest_writes_the_59_column_artifact() {
    let dir = setup();
    let out = varqfs(dir.path(), &["ingest", "-c", "cfg.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let encoded = std::fs::read_to_string(dir.path().join("out/encoded.csv")).unwrap();
    let mut lines = encoded.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# config_hash="));
    assert!(meta.contains("master_seed=5"));
    assert!(meta.contains("artifact_version=1"));
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 60, "59 features + label");
    assert_eq!(lines.count(), 150);
    assert!(dir.path().join("out/split.json").exists());

    // the split manifest parses and references disjoint halves
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/split.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["train_rows"].as_u64().unwrap() + manifest["test_rows"].as_u64().unwrap(), 150);
}

#[test]
fn analyze_without_training_is_a_clear_data_error() {
    let dir = setup();
    let out = varqfs(
        dir.path(),
        &["analyze", "-c", "cfg.toml", "cdf", "--result-dir", "out/seed_0"],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("samples.csv"));
}

#[test]
fn qubofit_is_capped() {
    let dir = setup();
    let out = varqfs(dir.path(), &["analyze", "-c", "cfg.toml", "qubofit", "--n", "30"]);
    assert_eq!(out.status.code(), Some(1), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("view"));

    let out = varqfs(
        dir.path(),
        &["analyze", "-c", "cfg.toml", "--feature-mode", "full", "qubofit", "--n", "23"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn oversized_statevector_request_is_refused_up_front() {
    let dir = setup();
    let out = varqfs(
        dir.path(),
        &["train", "-c", "cfg.toml", "--feature-mode", "full", "--backend", "statevector"],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mps"));
}

#[test]
fn train_then_analyze_produces_the_full_artifact_set() {
    let dir = setup();
    assert!(varqfs(dir.path(), &["train", "-c", "cfg.toml"]).status.success());
    for file in ["trace.csv", "theta.json", "samples.csv", "result.json", "cache.csv"] {
        assert!(dir.path().join("out/seed_0").join(file).exists(), "missing {file}");
    }
    assert!(varqfs(dir.path(), &["baseline", "-c", "cfg.toml", "--out", "base", "rfe"])
        .status
        .success());
    let analyze = |what: &[&str]| {
        let mut args = vec!["analyze", "-c", "cfg.toml", "--out", "an"];
        args.extend_from_slice(what);
        assert!(
            varqfs(dir.path(), &args).status.success(),
            "analyze {what:?} failed"
        );
    };
    analyze(&["cdf", "--result-dir", "out/seed_0"]);
    analyze(&["ci", "--result-dir", "out/seed_0"]);
    analyze(&["compare", "--result-dir", "out/seed_0", "--baseline-json", "base/rfe.json"]);
    analyze(&["qubofit"]);
    for file in ["cdf_train.csv", "cdf_test.csv", "ci.csv", "compare.csv", "qubofit.json"] {
        assert!(dir.path().join("an").join(file).exists(), "missing {file}");
    }

    // CDF artifact: probabilities end at 1
    let cdf = std::fs::read_to_string(dir.path().join("an/cdf_train.csv")).unwrap();
    let last = cdf.lines().last().unwrap();
    let mass: f64 = last.rsplit(',').next().unwrap().parse().unwrap();
    assert!((mass - 1.0).abs() < 1e-9, "CDF ends at {mass}");
}

#[test]
fn rerunning_ingest_is_byte_identical() {
    let dir = setup();
    assert!(varqfs(dir.path(), &["ingest", "-c", "cfg.toml", "--out", "i1"]).status.success());
    assert!(varqfs(dir.path(), &["ingest", "-c", "cfg.toml", "--out", "i2"]).status.success());
    for file in ["encoded.csv", "split.json"] {
        let a = std::fs::read(dir.path().join("i1").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("i2").join(file)).unwrap();
        assert_eq!(a, b, "{file} differs across reruns");
    }
}
