use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(rel)
}

fn clonelog(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_clonelog"))
        .arg("--out")
        .arg(out)
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .expect("binary runs")
}

fn stdout_json(o: &Output) -> Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).expect("stdout is json")
}

fn error_json(o: &Output) -> Value {
    assert!(!o.status.success());
    let v: Value = serde_json::from_slice(&o.stderr).expect("stderr is json");
    assert!(v["error"]["message"].is_string());
    v
}

fn run_corpus(out: &Path) -> Value {
    let root = fixture("corpus");
    stdout_json(&clonelog(out, &["run", "--root", root.to_str().unwrap()]))
}

#[test]
fn run_writes_every_stage_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_corpus(dir.path());
    assert_eq!(report["positives"], 2);
    for name in ["methods.jsonl", "features.jsonl", "pairs.csv", "lsd_train.txt", "vocab.tsv", "model.bin", "report.csv", "report.md", "run.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let golden = std::fs::read_to_string(fixture("golden/report.csv")).unwrap();
    assert_eq!(std::fs::read_to_string(dir.path().join("report.csv")).unwrap(), golden);
}

#[test]
fn stages_can_run_one_at_a_time() {
    let dir = tempfile::tempdir().unwrap();
    let root = fixture("corpus");
    let ingest = stdout_json(&clonelog(dir.path(), &["ingest", "--root", root.to_str().unwrap()]));
    assert_eq!((ingest["methods"].as_u64(), ingest["logged_methods"].as_u64()), (Some(12), Some(7)));
    assert_eq!(stdout_json(&clonelog(dir.path(), &["features"]))["features"], 12);
    stdout_json(&clonelog(dir.path(), &["detect", "--mode", "si_only"]));
    stdout_json(&clonelog(dir.path(), &["detect"]));
    stdout_json(&clonelog(dir.path(), &["corpus"]));
    assert_eq!(stdout_json(&clonelog(dir.path(), &["train", "--kind", "ngram"]))["model"], "ngram");
    let report = stdout_json(&clonelog(dir.path(), &["evaluate"]));
    assert_eq!(report["negatives"], 19);
}

#[test]
fn suggest_flags_an_unlogged_clone() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus(dir.path());
    let snippet = fixture("snippets/ReleaseAddress.java");
    let doc = stdout_json(&clonelog(dir.path(), &["suggest", snippet.to_str().unwrap()]));
    assert_eq!(doc["variant"], "nlp_3");
    let s = &doc["suggestions"][0];
    assert_eq!(s["needs_log"], true);
    let candidates = s["descriptions"][0]["candidates"].as_array().unwrap();
    assert!(!candidates.is_empty());
}

#[test]
fn suggest_without_a_clone_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus(dir.path());
    let snippet = fixture("snippets/Clamp.java");
    let doc = stdout_json(&clonelog(dir.path(), &["suggest", snippet.to_str().unwrap(), "--variant", "no_nlp"]));
    for s in doc["suggestions"].as_array().unwrap() {
        assert_eq!(s["needs_log"], false);
    }
}

#[test]
fn missing_inputs_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let o = clonelog(dir.path(), &["features"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"]["kind"], "io");
}

#[test]
fn bad_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[detector]\nthreshhold = 0.9\n").unwrap();
    let o = clonelog(dir.path(), &["--config", cfg.to_str().unwrap(), "features"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"]["kind"], "config");
}

#[test]
fn bad_mode_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = clonelog(dir.path(), &["detect", "--mode", "fuzzy"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"]["kind"], "usage");
}

#[test]
fn seed_changes_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    run_corpus(dir.path());
    let o = clonelog(dir.path(), &["--seed", "9", "features"]);
    assert_eq!(error_json(&o)["error"]["kind"], "config_mismatch");
}
