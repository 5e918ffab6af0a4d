use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plr_core::numeric::Rng;
use serde_json::Value;
use tempfile::TempDir;

fn plr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plr")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = plr(args);
    assert!(
        out.status.success(),
        "plr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    plr(args).status.code().unwrap()
}

/// y = 2a - b + 1 on 300 rows, with a schema beside it.
fn fixture(dir: &Path) -> PathBuf {
    let mut rng = Rng::new(12, 0);
    let mut csv = String::from("a,b,y\n");
    for _ in 0..300 {
        let a = rng.uniform_between(-1.0, 1.0);
        let b = rng.uniform_between(-1.0, 1.0);
        csv.push_str(&format!("{a},{b},{}\n", 2.0 * a - b + 1.0));
    }
    let data = dir.join("lin.csv");
    std::fs::write(&data, csv).unwrap();
    std::fs::write(
        dir.join("lin.schema.json"),
        r#"{"columns":[{"name":"a","kind":"continuous"},{"name":"b","kind":"continuous"}],"target":"y"}"#,
    )
    .unwrap();
    data
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn jsonl(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn corrupted(tmp: &TempDir, k: &str) -> PathBuf {
    let data = fixture(tmp.path());
    let out = tmp.path().join(format!("c{k}"));
    ok(&["corrupt", "--data", s(&data), "--num-false", k, "--seed", "1", "--out", s(&out)]);
    out
}

#[test]
fn corrupt_splits_and_builds_candidate_sets() {
    let tmp = TempDir::new().unwrap();
    let out = corrupted(&tmp, "3");
    let train = jsonl(&out.join("train.jsonl"));
    assert_eq!(train.len(), 180);
    assert_eq!(jsonl(&out.join("validation.jsonl")).len(), 60);
    let test = jsonl(&out.join("test.jsonl"));
    assert_eq!(test.len(), 60);
    for r in &train {
        let c = r["candidates"].as_array().unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.contains(&r["y_true"]));
    }
    assert!(test.iter().all(|r| r["candidates"].as_array().unwrap().len() == 1));
    assert!(out.join("manifest.json").exists());
}

#[test]
fn zero_false_labels_gives_singletons() {
    let tmp = TempDir::new().unwrap();
    let out = corrupted(&tmp, "0");
    for r in jsonl(&out.join("train.jsonl")) {
        assert_eq!(r["candidates"], serde_json::json!([r["y_true"]]));
    }
}

#[test]
fn missing_schema_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("orphan.csv");
    std::fs::write(&data, "a,y\n1,2\n").unwrap();
    assert_eq!(code(&["corrupt", "--data", s(&data), "--out", s(&tmp.path().join("o"))]), 2);
    assert_eq!(code(&["train", "--method", "nonsense", "--data", s(tmp.path())]), 2);
}

#[test]
fn supervised_linear_fit_is_near_exact() {
    let tmp = TempDir::new().unwrap();
    let data = corrupted(&tmp, "0");
    let out = tmp.path().join("fit");
    ok(&[
        "train", "--data", s(&data), "--method", "supervised", "--model", "linear", "--lr", "0.05", "--out", s(&out),
    ]);
    let fit = json(&out.join("fit.json"));
    assert!(fit["test_mse"].as_f64().unwrap() < 1e-3, "{}", fit["test_mse"]);
    assert_eq!(fit["train_loss"].as_array().unwrap().len(), 1000);
    assert!(out.join("model.json").exists());
}

#[test]
fn zero_temperature_weighting_matches_average_loss() {
    let tmp = TempDir::new().unwrap();
    let data = corrupted(&tmp, "3");
    let first_loss = |method: &str, extra: &[&str]| {
        let out = tmp.path().join(method);
        let mut args = vec!["train", "--data", s(&data), "--method", method, "--epochs", "3", "--no-checkpoint"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", s(&out)]);
        ok(&args);
        assert!(!out.join("model.json").exists());
        json(&out.join("fit.json"))["train_loss"][0].as_f64().unwrap()
    };
    assert_eq!(first_loss("pident", &["--beta2", "0"]), first_loss("avgl", &[]));
}

#[test]
fn huge_learning_rate_exits_with_divergence() {
    let tmp = TempDir::new().unwrap();
    let data = corrupted(&tmp, "2");
    let out = tmp.path().join("boom");
    let args = ["train", "--data", s(&data), "--method", "ident", "--lr", "1e6", "--epochs", "50", "--out", s(&out)];
    assert_eq!(code(&args), 3);
}

#[test]
fn bench_writes_one_line_per_trial_and_resumes() {
    let tmp = TempDir::new().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("bench");
    let args = [
        "bench", "--data", s(&data), "--method", "ident,avgl-mse", "--num-false", "2", "--repeats", "3",
        "--model", "linear", "--epochs", "20", "--workers", "2", "--out", s(&out),
    ];
    let summary = ok(&args);
    assert!(summary.contains("IDent"), "{summary}");
    let store = std::fs::read(out.join("results.jsonl")).unwrap();
    assert_eq!(jsonl(&out.join("results.jsonl")).len(), 6);
    for f in ["table.md", "table.csv", "cells.csv", "report.json", "manifest.json", "degradation-lin.svg"] {
        assert!(out.join(f).exists(), "{f}");
    }
    ok(&args);
    assert_eq!(std::fs::read(out.join("results.jsonl")).unwrap(), store);
}

#[test]
fn bench_with_every_trial_diverging_exits_four() {
    let tmp = TempDir::new().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("bench");
    let args = [
        "bench", "--data", s(&data), "--method", "ident", "--num-false", "2", "--repeats", "2", "--model",
        "linear", "--epochs", "50", "--lr", "1e6", "--out", s(&out),
    ];
    assert_eq!(code(&args), 4);
    assert_eq!(jsonl(&out.join("failures.jsonl")).len(), 2);
}

#[test]
fn scaling_reports_each_fraction() {
    let tmp = TempDir::new().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("scale");
    ok(&[
        "scaling", "--data", s(&data), "--fractions", "1.0,0.5", "--repeats", "2", "--model", "linear",
        "--epochs", "20", "--out", s(&out),
    ]);
    let csv = std::fs::read_to_string(out.join("scaling.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0.5,"));
    assert!(out.join("scaling.svg").exists());
    assert_eq!(jsonl(&out.join("trials.jsonl")).len(), 4);

    let bad_out = tmp.path().join("bad");
    let bad = ["scaling", "--data", s(&data), "--fractions", "0,0.5", "--out", s(&bad_out)];
    assert_eq!(code(&bad), 2);
}

#[test]
fn replay_reproduces_the_store() {
    let tmp = TempDir::new().unwrap();
    let data = fixture(tmp.path());
    let out = tmp.path().join("orig");
    ok(&[
        "bench", "--data", s(&data), "--method", "pident", "--beta2", "10,100", "--num-false", "2", "--repeats",
        "2", "--model", "linear", "--epochs", "10", "--out", s(&out),
    ]);
    let again = tmp.path().join("again");
    ok(&["replay", s(&out.join("manifest.json")), "--out", s(&again), "--workers", "3"]);
    assert_eq!(
        std::fs::read(out.join("results.jsonl")).unwrap(),
        std::fs::read(again.join("results.jsonl")).unwrap()
    );
}

#[test]
fn default_run_dir_lives_under_the_env_root() {
    let tmp = TempDir::new().unwrap();
    let data = fixture(tmp.path());
    let root = tmp.path().join("runs-root");
    let out = Command::new(env!("CARGO_BIN_EXE_plr"))
        .args(["corrupt", "--data", s(&data), "--num-false", "1"])
        .env("PLR_BENCH_OUT", &root)
        .output()
        .unwrap();
    assert!(out.status.success());
    let dirs: Vec<_> = std::fs::read_dir(&root).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert_eq!(dirs.len(), 1);
    assert!(dirs[0].to_str().unwrap().starts_with("corrupt-"));
}
