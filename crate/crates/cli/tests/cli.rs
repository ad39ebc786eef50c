use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_coordlab");

const SMALL_SPEC: &str = r#"{
  "seed": 5,
  "domains": { "d": ["blorp", "zint", "quax", "fendle", "mirk", "tabby"] },
  "groups": [
    { "name": "boss", "size": 20, "labels": ["high"], "domain": "d", "p": 0.3, "delta": 0.0, "q": 0.5, "cue_words": ["memo"] },
    { "name": "staff", "size": 20, "labels": ["low"], "domain": "d", "p": 0.1, "delta": 0.4, "q": 0.5, "cue_words": ["please"] }
  ],
  "interactions": [
    { "speakers": "staff", "targets": "boss", "exchanges_per_speaker": 60, "partners": 1, "reciprocal": true }
  ]
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("COORDLAB_SEED")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    let line = text.lines().last().expect("stderr has a line");
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

/// Writes the small spec and simulates it into `dir/sim`.
fn simulate(dir: &Path) -> (PathBuf, PathBuf) {
    let spec = dir.join("spec.json");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let out = dir.join("sim");
    let o = run(&["simulate", "--spec", s(&spec), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    (out.join("utterances.jsonl"), out.join("participants.jsonl"))
}

#[test]
fn coordinate_writes_eleven_rows_and_config() {
    let dir = TempDir::new().unwrap();
    let (u, p) = simulate(dir.path());
    let out = dir.path().join("coord");
    let o = run(&["coordinate", "--corpus", s(&u), "--participants", s(&p), "--speakers", "low", "--targets", "high", "--seed", "9", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let csv = fs::read_to_string(out.join("profile.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().any(|r| r.contains(",aggregated_3,")));

    let config: Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["seed"], 9);
    assert_eq!(config["command"], "coordinate");
    assert_eq!(config["speakers"], "low");
}

#[test]
fn seed_falls_back_to_environment() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, SMALL_SPEC).unwrap();
    let out = dir.path().join("v");
    let o = Command::new(BIN)
        .args(["validate", "--spec", s(&spec), "--out", s(&out)])
        .env("COORDLAB_SEED", "41")
        .output()
        .unwrap();
    assert!(o.status.success());
    let config: Value = serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["seed"], 41);
}

#[test]
fn outputs_are_byte_identical_across_runs_and_modes() {
    let dir = TempDir::new().unwrap();
    let (u, p) = simulate(dir.path());
    let mut outputs = Vec::new();
    for (i, extra) in [None, None, Some("--sequential")].into_iter().enumerate() {
        let out = dir.path().join(format!("cmp{i}"));
        let mut args = vec!["compare", "--corpus", s(&u), "--participants", s(&p), "--a", "high", "--b", "low", "--as", "targets", "--seed", "3", "--resamples", "200", "--out", s(&out)];
        args.extend(extra);
        let o = run(&args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push((fs::read(out.join("comparison.csv")).unwrap(), fs::read(out.join("comparison.json")).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn invalid_spec_exits_two() {
    let dir = TempDir::new().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(&spec, SMALL_SPEC.replace("\"delta\": 0.4", "\"delta\": 0.95")).unwrap();
    let o = run(&["simulate", "--spec", s(&spec), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr_json(&o);
    assert_eq!(err["error"], "InvalidSpec");
    assert_eq!(err["exit_code"], 2);
}

#[test]
fn malformed_corpus_exits_three() {
    let dir = TempDir::new().unwrap();
    let u = dir.path().join("u.jsonl");
    fs::write(&u, "{\"id\":\"a\",\"conv_id\":\"c\",\"speaker\":\"x\",\"text\":\"hi\"}\nnot json\n").unwrap();
    let o = run(&["coordinate", "--corpus", s(&u), "--out", s(&dir.path().join("x"))]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_json(&o)["error"], "MalformedRecord");
}

#[test]
fn user_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    let (u, p) = simulate(dir.path());
    let x = dir.path().join("x");
    let cases: Vec<Vec<&str>> = vec![
        vec!["coordinate", "--no-such-flag"],
        vec!["coordinate", "--out", s(&x)],
        vec!["validate", "--out", s(&x)],
        vec!["coordinate", "--corpus", s(&u), "--participants", s(&p), "--speakers", "nobody", "--out", s(&x)],
        vec!["coordinate", "--corpus", s(&u), "--filters", "{not json", "--out", s(&x)],
        vec!["predict", "--corpus", s(&u), "--participants", s(&p), "--high", "admin", "--low", "low", "--out", s(&x)],
    ];
    for args in cases {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(stderr_json(&o)["exit_code"], 2);
    }
}

#[test]
fn single_domain_predict_reports_absent_cross_cell() {
    let dir = TempDir::new().unwrap();
    let (u, p) = simulate(dir.path());
    let out = dir.path().join("pred");
    let o = run(&[
        "predict", "--corpus", s(&u), "--participants", s(&p), "--high", "high", "--low", "low", "--tag", "d",
        "--kinds", "coordination,bow", "--export-datasets", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grid: Value = serde_json::from_str(&fs::read_to_string(out.join("grid.json")).unwrap()).unwrap();
    let cells = grid["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    let absent: Vec<&Value> = cells.iter().filter(|c| c["status"] == "absent").collect();
    assert_eq!(absent.len(), 2);
    assert!(absent.iter().all(|c| c["test"].is_null()));
    assert!(out.join("datasets/d_bow.jsonl").exists());
    assert!(out.join("datasets/d_coordination.jsonl").exists());
}

#[test]
fn timeline_without_events_is_a_metadata_error() {
    let dir = TempDir::new().unwrap();
    let (u, p) = simulate(dir.path());
    let o = run(&["timeline", "--corpus", s(&u), "--participants", s(&p), "--users", "low", "--out", s(&dir.path().join("t"))]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stderr_json(&o)["error"], "InsufficientMetadata");
}
