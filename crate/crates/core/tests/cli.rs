//! End-to-end runs of the `fdss` binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use common::cleveland_path;

fn fdss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdss"))
        .args(args)
        .env_clear()
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn train_into(out: &Path) -> String {
    let data = cleveland_path();
    ok(&fdss(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--split",
        "0.7",
        "--out",
        out.to_str().unwrap(),
    ]))
}

fn eval_json(artifact: &Path, extra: &[&str]) -> Value {
    let data = cleveland_path();
    let mut args = vec!["eval", "--artifact", artifact.to_str().unwrap(), "--data", data.to_str().unwrap(), "--json"];
    args.extend_from_slice(extra);
    serde_json::from_str(&ok(&fdss(&args))).unwrap()
}

#[test]
fn train_eval_diagnose() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("model.json");
    let stdout = train_into(&artifact);
    assert!(stdout.contains("select"), "{stdout}");
    assert!(artifact.exists());

    let report = eval_json(&artifact, &[]);
    assert_eq!(report["fuzzy"]["objects"], 303);
    let c = &report["fuzzy"]["confusion"];
    let total: u64 = ["tp", "tn", "fp", "fn", "uncovered"].iter().map(|k| c[k].as_u64().unwrap()).sum();
    assert!(total >= 303);

    let text = ok(&fdss(&[
        "diagnose",
        "--artifact",
        artifact.to_str().unwrap(),
        "--set",
        "oldpeak=2.3",
        "--set",
        "thal=7",
        "--set",
        "chol=?",
    ]));
    assert!(text.contains("percentage") && text.contains("label"), "{text}");
}

#[test]
fn diagnose_json_matches_text_rules() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("model.json");
    train_into(&artifact);
    let out = ok(&fdss(&["diagnose", "--artifact", artifact.to_str().unwrap(), "--set", "ca=2", "--json"]));
    let v: Value = serde_json::from_str(&out).unwrap();
    let model: Value = serde_json::from_str(&std::fs::read_to_string(&artifact).unwrap()).unwrap();
    assert_eq!(
        v["activations"].as_array().unwrap().len(),
        model["rulebase"]["rules"].as_array().unwrap().len()
    );
}

#[test]
fn unknown_attribute_lists_legal_names() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("model.json");
    train_into(&artifact);
    let out = fdss(&["diagnose", "--artifact", artifact.to_str().unwrap(), "--set", "cholesterol=200"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("cholesterol") && err.contains("oldpeak") && err.contains("thal"), "{err}");
}

#[test]
fn eval_rejects_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("model.json");
    train_into(&artifact);
    let empty = dir.path().join("empty.data");
    std::fs::write(&empty, "").unwrap();
    let out = fdss(&["eval", "--artifact", artifact.to_str().unwrap(), "--data", empty.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}

#[test]
fn threshold_override_moves_the_confusion_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let artifact = dir.path().join("model.json");
    train_into(&artifact);
    let at_50 = eval_json(&artifact, &[]);
    let at_60 = eval_json(&artifact, &["--threshold", "60"]);
    assert_eq!(at_60["threshold"], 60.0);
    let positives = |r: &Value| r["fuzzy"]["confusion"]["tp"].as_u64().unwrap() + r["fuzzy"]["confusion"]["fp"].as_u64().unwrap();
    assert!(positives(&at_60) <= positives(&at_50));
    assert_ne!(at_50["fuzzy"]["confusion"], at_60["fuzzy"]["confusion"]);
    // the crisp vote has no threshold
    assert_eq!(at_50["crisp"], at_60["crisp"]);
}

#[test]
fn training_is_reproducible_across_processes() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    train_into(&a);
    train_into(&b);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn invalid_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let data = cleveland_path();
    let out = fdss(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--split",
        "1.5",
        "--out",
        dir.path().join("x.json").to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    assert!(!dir.path().join("x.json").exists());
}
