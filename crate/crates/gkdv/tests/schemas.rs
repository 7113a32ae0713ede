use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use gkdv::config::RunConfig;
use gkdv::pipeline::Pipeline;
use serde_json::Value;

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/schemas")
        .join(format!("{name}.schema.json"));
    let s: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    jsonschema::validator_for(&s).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn assert_valid(name: &str, doc: &Value, what: &str) {
    let v = schema(name);
    let errors: Vec<String> = v
        .iter_errors(doc)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .take(5)
        .collect();
    assert!(errors.is_empty(), "{what} against {name}: {errors:#?}");
}

fn validate_file(name: &str, path: &Path) {
    let doc: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    assert_valid(name, &doc, &path.display().to_string());
}

// Artifacts of a run directory and the schema each must satisfy.
fn run_artifacts(dir: &Path, order: usize) -> Vec<(&'static str, PathBuf)> {
    let mut v = vec![
        ("manifest", dir.join("manifest.json")),
        ("profile_set", dir.join(format!("profiles/K{order}/profile_set.json"))),
        ("profile_summary", dir.join(format!("profiles/K{order}/summary.json"))),
        ("modulation_state", dir.join("initial/state0.json")),
        ("evolve_summary", dir.join("evolve/summary.json")),
        ("conserved", dir.join("evolve/conserved.json")),
        ("tracking", dir.join("decompose/tracking.json")),
    ];
    if dir.join("verify").exists() {
        v.push(("asymptotics_report", dir.join("verify/report.json")));
        v.push(("criteria", dir.join("verify/criteria.json")));
        v.push(("windowed_integrals", dir.join("verify/outside_window.json")));
    }
    v
}

#[test]
fn small_run_artifacts_match_schemas() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("schema-run");
    let _ = fs::remove_dir_all(&dir);
    let mut cfg = RunConfig::default();
    for kv in ["n=25", "t_end=0.203", "domain=-48,24", "snapshots=4"] {
        cfg.apply_override(kv).unwrap();
    }
    let mut p = Pipeline::new(&dir, cfg).unwrap();
    let ps = p.profiles(3).unwrap();
    let init = p.initial(&ps).unwrap();
    let traj = p.evolve(&init).unwrap();
    p.decompose(&traj, &ps, &init.state0).unwrap();
    for (name, path) in run_artifacts(&dir, 3) {
        validate_file(name, &path);
    }
}

// Present once the acceptance target has run.
#[test]
fn acceptance_run_artifacts_match_schemas() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-run");
    if !dir.join("verify/report.json").exists() {
        return;
    }
    for (name, path) in run_artifacts(&dir, 3) {
        validate_file(name, &path);
    }
}

#[test]
fn cli_json_outputs_match_schemas() {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("schema-cli");
    let bin = env!("CARGO_BIN_EXE_gkdv");
    let out = Command::new(bin).arg("spectrum").output().unwrap();
    assert_valid(
        "spectrum",
        &serde_json::from_slice(&out.stdout).unwrap(),
        "spectrum output",
    );
    let out = Command::new(bin)
        .args(["--quiet", "--output-dir", dir.to_str().unwrap(), "constants"])
        .output()
        .unwrap();
    assert!(out.status.success());
    validate_file("constants", &dir.join("constants.json"));
}

#[test]
fn schemas_reject_malformed_documents() {
    let bad = serde_json::json!({"version": "0.1.0", "stages": {}});
    assert!(!schema("manifest").is_valid(&bad));
    let bad_state = serde_json::json!({"lambda": -1.0, "x_center": 0.0, "b": 0.0, "gamma": 0.9, "time_label": 0.0,
        "epsilon": {"grid": {"left": 0.0, "right": 1.0, "n": 16, "spacing": 0.1, "topology": "line"}, "values": []}});
    assert!(!schema("modulation_state").is_valid(&bad_state));
}
