use std::process::{Command, Output};

use serde_json::Value;

fn isospec(args: &[&str], dir: &std::path::Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isospec")).args(args).arg("--output-dir").arg(dir).output().unwrap()
}

fn error_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn unknown_potential_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["spectrum", "--potential", "bogus"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let e = error_json(&out);
    assert_eq!(e["error"]["module"], "cli");
    assert_eq!(e["error"]["operation"], "config");
}

#[test]
fn unknown_config_key_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"command": "spectrum", "command_options": {"levelz": 3}}"#).unwrap();
    let out = isospec(&["--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(out.status.code(), Some(2));
    assert!(error_json(&out)["error"]["message"].as_str().unwrap().contains("levelz"));
}

#[test]
fn long_range_compare_is_a_module_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["compare"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert_eq!(e["error"]["module"], "families");
    assert!(!dir.path().join("manifest.json").exists());
}

#[test]
fn spectrum_run_writes_manifest_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = isospec(&["spectrum", "--levels", "3"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["summary"], summary);
    assert_eq!(manifest["config"]["command"], "spectrum");
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(dir.path().join(f.as_str().unwrap()).exists(), "{f}");
    }
    assert!(dir.path().join("run_info.json").exists());
}
