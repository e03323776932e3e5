use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const LOG_MODEL: &str = r#"{"R": [["1/2", "1/2", 0], [0, "1/2", "1/2"], [0, 0, 1]], "C0": ["1/3", "1/3", "1/3"]}"#;
const UNLINKED_TIE: &str = r#"{"R": [["1/2", 0, "1/2"], [0, "1/2", "1/2"], [0, 0, 1]], "C0": ["1/3", "1/3", "1/3"]}"#;
const OUT_OF_ORDER: &str = r#"{"R": [[0.5, 0, 0.5], [0, 0.25, 0.75], [0, 0, 1]], "C0": [0.5, 0.25, 0.25], "labels": ["a", "b", "c"]}"#;
const TWO_COLOR: &str = r#"{"R": [["1/2", "1/2"], [0, 1]], "C0": ["1/2", "1/2"]}"#;

fn urn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urn")).args(args).output().expect("binary runs")
}

fn write_model(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn analyze_reports_structure_and_rates() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "log.json", LOG_MODEL);
    let out = urn(&["analyze", p(&model)]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["dim"], 3);
    assert_eq!(v["leading_indices"], serde_json::json!([1, 2, 3]));
    assert_eq!(v["unique_arrangement"], true);
    assert_eq!(v["rates"][1]["exponent"], "1/2");
    assert_eq!(v["rates"][1]["log_power"], 1);
    assert_eq!(v["rates"][2]["exponent"], "1/1");
}

#[test]
fn analyze_text_lists_rates() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "log.json", LOG_MODEL);
    let out = urn(&["analyze", p(&model), "--format", "text"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("colors: 3"), "{text}");
    assert!(text.contains("N^1/2 log N"), "{text}");
}

#[test]
fn analyze_rearranges_out_of_order_colors() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "order.json", OUT_OF_ORDER);
    let plain = stdout_json(&urn(&["analyze", p(&model)]));
    assert_eq!(plain["increasing_order_violations"], serde_json::json!([2]));

    let out = urn(&["analyze", p(&model), "--rearrange"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["permutation"], serde_json::json!([1, 0, 2]));
    assert_eq!(v["certificate"]["violations"], serde_json::json!([]));
    assert_eq!(v["rearranged"]["labels"], serde_json::json!(["b", "a", "c"]));
    assert!(v["profile"]["blocks"].is_array());
}

#[test]
fn analyze_reports_unlinked_tie() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "tie.json", UNLINKED_TIE);
    let v = stdout_json(&urn(&["analyze", p(&model), "--rearrange"]));
    assert_eq!(v["unique_arrangement"], false);
    assert!(v["assumption_failure"].is_string());
    assert!(v.get("profile").is_none());
}

#[test]
fn invalid_models_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let unbalanced = write_model(&dir, "bad.json", r#"{"R": [[0.5, 0.2], [0, 1]], "C0": [0.5, 0.5]}"#);
    let out = urn(&["analyze", p(&unbalanced)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));

    let garbage = write_model(&dir, "garbage.json", "not json");
    assert_eq!(urn(&["analyze", p(&garbage)]).status.code(), Some(2));
    assert_eq!(urn(&["analyze", "/nonexistent/model.json"]).status.code(), Some(2));
}

#[test]
fn oracle_modes() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "two.json", TWO_COLOR);

    let out = urn(&["oracle", p(&model), "--steps", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    // one draw: color 1 with probability 1/2 adds (1/2, 1/2), otherwise (0, 1)
    assert_eq!(v["mean"], serde_json::json!(["3/4", "5/4"]));

    let path = dir.path().join("tree.json");
    let out = urn(&["oracle", p(&model), "--steps", "2", "--mode", "enumerate", "--out", p(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["atoms"].as_array().unwrap().len(), 3);

    let out = urn(&["oracle", p(&model), "--steps", "4", "--mode", "martingale"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert!(v["martingale_checks"].as_array().unwrap().iter().all(|c| c["max_discrepancy"] == "0/1"));

    let out = urn(&["oracle", p(&model), "--steps", "100", "--mode", "enumerate"]);
    assert_eq!(out.status.code(), Some(0), "two colors stay small");
    let big = write_model(&dir, "log.json", LOG_MODEL);
    let out = urn(&["oracle", p(&big), "--steps", "5000", "--mode", "enumerate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulate_writes_reproducible_csv() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "log.json", LOG_MODEL);
    let first = dir.path().join("a.csv");
    let second = dir.path().join("b.csv");
    for path in [&first, &second] {
        let out = urn(&["simulate", p(&model), "--steps", "2000", "--reps", "3", "--seed", "9", "--out", p(path)]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read_to_string(&first).unwrap();
    assert_eq!(a, fs::read_to_string(&second).unwrap());
    let header = a.lines().next().unwrap();
    assert!(header.starts_with("rep,N,c_1,c_2,c_3,scaled_1,scaled_2,scaled_3"), "{header}");
    assert!(a.lines().any(|l| l.starts_with("2,2000,")));

    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["reps"], 3);
    assert_eq!(meta["m_colors"], serde_json::json!([1, 2, 3]));
}

#[test]
fn verify_refuses_unlinked_tie_unless_rates_only() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "tie.json", UNLINKED_TIE);
    let out = urn(&["verify", p(&model), "--steps", "1000", "--reps", "4"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--rates-only"));

    let report = dir.path().join("report.json");
    let out = urn(&["verify", p(&model), "--steps", "1000", "--reps", "4", "--rates-only", "--out", p(&report)]);
    assert!(matches!(out.status.code(), Some(0 | 1)));
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["metadata"]["rates_only"], true);
}

#[test]
fn verify_writes_report_with_verdicts() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "two.json", TWO_COLOR);
    let report = dir.path().join("report.json");
    let out = urn(&["verify", p(&model), "--steps", "100000", "--reps", "40", "--seed", "5", "--out", p(&report)]);
    let v: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let passed = v["passed"].as_bool().unwrap();
    assert_eq!(out.status.code(), Some(if passed { 0 } else { 1 }));
    assert_eq!(v["metadata"]["seed"], 5);
    let verdicts = v["verdicts"].as_array().unwrap();
    assert!(!verdicts.is_empty());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL") || l.starts_with("SKIP")).count(), verdicts.len(), "{stderr}");
}

#[test]
fn verify_rejects_unknown_config_keys() {
    let dir = TempDir::new().unwrap();
    let model = write_model(&dir, "two.json", TWO_COLOR);
    let config = write_model(&dir, "cfg.json", r#"{"steps": 1000, "colour": 3}"#);
    let out = urn(&["verify", p(&model), "--config", p(&config)]);
    assert_eq!(out.status.code(), Some(2));
}
