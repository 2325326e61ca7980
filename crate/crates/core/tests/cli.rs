use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pdlight::experiment::ExperimentConfig;

fn pdlight(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdlight"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

#[test]
fn shipped_configs_parse_and_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = ExperimentConfig::load(&path).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.scenario().unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 5);
}

#[test]
fn unknown_config_field_fails_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.json"), r#"{"controller": {"kind": "fixed", "colour": 3}}"#).unwrap();
    let out = pdlight(&["run", "--config", "bad.json", "--seed", "0", "--out", "o"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn missing_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdlight(&["train", "--config", "nope.json", "--out", "o"], dir.path());
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn invalid_values_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"controller": {"kind": "dqn", "min_green": 30, "max_green": 20}, "gamma": 1.5}"#,
    )
    .unwrap();
    let out = pdlight(&["run", "--config", "bad.json", "--seed", "0", "--out", "o"], dir.path());
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("gamma") && err.contains("min_green"), "{err}");
}

#[test]
fn train_and_eval_reject_rule_based_controllers() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("fixed.json"), r#"{"controller": {"kind": "fixed"}, "episode_length": 60}"#).unwrap();
    fs::write(dir.path().join("ckpt.txt"), "not a checkpoint").unwrap();
    assert!(!pdlight(&["train", "--config", "fixed.json", "--out", "o"], dir.path()).status.success());
    assert!(!pdlight(&["eval", "--config", "fixed.json", "--checkpoint", "ckpt.txt", "--out", "o"], dir.path())
        .status
        .success());
}

#[test]
fn eval_rejects_mismatched_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(
        d.join("small.json"),
        r#"{"controller": {"kind": "dqn"}, "layers": [16, 8, 4], "episode_length": 120, "train_episodes": 1, "seeds": [0]}"#,
    )
    .unwrap();
    fs::write(d.join("full.json"), r#"{"controller": {"kind": "dqn"}, "episode_length": 120}"#).unwrap();
    assert!(pdlight(&["train", "--config", "small.json", "--out", "t"], d).status.success());
    let out = pdlight(&["eval", "--config", "full.json", "--checkpoint", "t/seed_0/checkpoint_final.txt", "--out", "e"], d);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("layers"));
}

#[test]
fn case_study_of_empty_telemetry_gives_empty_tables() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    fs::write(d.join("none.json"), r#"{"controller": {"kind": "fixed"}, "episode_length": 1}"#).unwrap();
    assert!(pdlight(&["run", "--config", "none.json", "--seed", "0", "--out", "r"], d).status.success());
    // keep only the header
    let text = fs::read_to_string(d.join("r/telemetry.csv")).unwrap();
    fs::write(d.join("empty.csv"), format!("{}\n", text.lines().next().unwrap())).unwrap();
    let out = pdlight(&["case-study", "--telemetry", "empty.csv", "--out", "c"], d);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = fs::read_to_string(d.join("c/green_trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1);
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("c/case_study_summary.json")).unwrap()).unwrap();
    assert_eq!(summary["decisions"], 0);
    assert!(summary["max_vehicle_phase_frequency"].is_null());
}

#[test]
fn case_study_rejects_foreign_csv() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("x.csv"), "a,b\n1,2\n").unwrap();
    assert!(!pdlight(&["case-study", "--telemetry", "x.csv", "--out", "c"], dir.path()).status.success());
}

#[test]
fn generate_flow_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = pdlight(&["generate-flow", "syn-light", "--out", "f.json", "--roadnet-out", "r.json"], dir.path());
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("2160 events"));
    // the written pair drives a file-based config
    fs::write(
        dir.path().join("c.json"),
        r#"{"roadnet": {"type": "file", "path": "r.json"}, "flow": {"type": "file", "path": "f.json"}}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(dir.path().join("c.json")).unwrap();
    assert_eq!(cfg.scenario().unwrap().schedule.len(), 2160);
}
