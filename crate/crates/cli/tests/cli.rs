use std::path::Path;
use std::process::{Command, Output};

fn prosact(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prosact"))
        .args(args)
        .env_remove("PROSACT_SEED")
        .env_remove("PROSACT_CONFIG")
        .env_remove("PROSACT_OUT_DIR")
        .env_remove("PROSACT_TASK")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = prosact(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Small corpus, its features and a trained tree.
fn pipeline(root: &Path) {
    let corpus = root.join("corpus");
    ok(&["-q", "--seed", "4", "--out-dir", s(&corpus), "synth", "--per-class", "30"]);
    ok(&["-q", "--out-dir", s(&root.join("feat")), "extract", "--corpus", s(&corpus)]);
    ok(&[
        "-q",
        "--seed",
        "4",
        "--out-dir",
        s(&root.join("tree")),
        "train-tree",
        "--features",
        s(&root.join("feat/features.csv")),
        "--prune",
        "--folds",
        "5",
    ]);
}

#[test]
fn extract_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let first = std::fs::read(dir.path().join("feat/features.csv")).unwrap();
    ok(&["-q", "--out-dir", s(&dir.path().join("feat2")), "extract", "--corpus", s(&dir.path().join("corpus"))]);
    let second = std::fs::read(dir.path().join("feat2/features.csv")).unwrap();
    assert_eq!(first, second);
    assert!(first.starts_with(b"utt_id,da_class,da_tag,ling_dur,"));
}

#[test]
fn wrong_model_version_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let path = dir.path().join("tree/tree.json");
    let mut model: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    model["version"] = serde_json::json!(99);
    std::fs::write(&path, model.to_string()).unwrap();
    let out = prosact(&[
        "--out-dir",
        s(&dir.path().join("cls")),
        "classify-tree",
        "--tree",
        s(&path),
        "--features",
        s(&dir.path().join("feat/features.csv")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("version field"), "{err}");
    assert!(!dir.path().join("cls/posteriors.csv").exists());
}

#[test]
fn tree_and_task_classes_must_agree() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let out = prosact(&[
        "--out-dir",
        s(&dir.path().join("cls")),
        "classify-tree",
        "--tree",
        s(&dir.path().join("tree/tree.json")),
        "--features",
        s(&dir.path().join("feat/features.csv")),
        "--task",
        "q-vs-s",
    ]);
    assert!(!out.status.success());
}

#[test]
fn unknown_flag_fails() {
    let out = prosact(&["extract", "--corpus", "x", "--no-such-flag"]);
    assert!(!out.status.success());
}

#[test]
fn flag_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 5}"#).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let c = dir.path().join("c");
    ok(&["-q", "--config", s(&cfg), "--out-dir", s(&a), "synth", "--per-class", "5"]);
    ok(&["-q", "--config", s(&cfg), "--seed", "6", "--out-dir", s(&b), "synth", "--per-class", "5"]);
    ok(&["-q", "--seed", "6", "--out-dir", s(&c), "synth", "--per-class", "5"]);
    let utts = |d: &Path| std::fs::read(d.join("utterances.jsonl")).unwrap();
    assert_ne!(utts(&a), utts(&b));
    assert_eq!(utts(&b), utts(&c));
}
