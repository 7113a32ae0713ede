use std::fs;
use std::path::{Path, PathBuf};

use gkdv::config::RunConfig;
use gkdv::io::read_json;
use gkdv::pipeline::{Pipeline, RunManifest, MANIFEST};

fn fresh_dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    d
}

// A short run at n = 25 (λ ≈ 0.2), small enough for a test.
fn small_config() -> RunConfig {
    let mut c = RunConfig::default();
    for kv in ["n=25", "t_end=0.203", "domain=-48,24", "snapshots=4"] {
        c.apply_override(kv).unwrap();
    }
    c
}

fn seconds(dir: &Path, stage: &str) -> f64 {
    let m: RunManifest = read_json(&dir.join(MANIFEST)).unwrap();
    m.stages[stage].seconds
}

#[test]
fn stages_are_cached_and_invalidated() {
    let dir = fresh_dir("pipeline-cache");
    let cfg = small_config();
    let run = |cfg: &RunConfig| {
        let mut p = Pipeline::new(&dir, cfg.clone()).unwrap();
        let ps = p.profiles(cfg.order).unwrap();
        let init = p.initial(&ps).unwrap();
        let traj = p.evolve(&init).unwrap();
        let tracking = p.decompose(&traj, &ps, &init.state0).unwrap();
        (traj, tracking)
    };
    let (t1, k1) = run(&cfg);
    assert!((5..=6).contains(&t1.snapshots.len()));
    assert!(t1.max_relative_mass_drift() < 1e-8);
    assert_eq!(k1.states.len(), t1.snapshots.len());
    let evolve_secs = seconds(&dir, "evolve");
    let decompose_secs = seconds(&dir, "decompose");

    // same configuration: everything is read back unchanged
    let (t2, k2) = run(&cfg);
    assert_eq!(seconds(&dir, "evolve"), evolve_secs);
    assert_eq!(seconds(&dir, "decompose"), decompose_secs);
    assert_eq!(t1.snapshots, t2.snapshots);
    assert_eq!(t1.conserved, t2.conserved);
    assert_eq!(k1, k2);

    // a damaged artifact forces the stage to run again, with identical output
    let snap = dir.join("evolve/snapshots/snap_0002.csv");
    let original = fs::read_to_string(&snap).unwrap();
    fs::write(&snap, original.replacen("e-", "e+", 3)).unwrap();
    let (t3, _) = run(&cfg);
    assert_eq!(fs::read_to_string(&snap).unwrap(), original);
    assert_eq!(t3.snapshots, t1.snapshots);

    // a changed key re-runs evolve and decompose but keeps the profiles
    let profiles_secs = seconds(&dir, "profiles-K3");
    let mut longer = cfg.clone();
    longer.apply_override("t_end=0.204").unwrap();
    let (t4, _) = run(&longer);
    assert_eq!(seconds(&dir, "profiles-K3"), profiles_secs);
    assert!((t4.snapshots.last().unwrap().time - 0.204).abs() < 1e-12);
}

#[test]
fn invalid_configuration_is_rejected_before_any_work() {
    let dir = fresh_dir("pipeline-invalid");
    let mut cfg = RunConfig::default();
    cfg.apply_override("gamma=0.5").unwrap();
    let e = Pipeline::new(&dir, cfg).err().unwrap();
    assert_eq!(e.exit_code(), 2);
    assert!(!dir.join(MANIFEST).exists());
}

#[test]
fn identical_configurations_give_identical_artifacts() {
    let cfg = small_config();
    let hashes = |name: &str| {
        let dir = fresh_dir(name);
        let mut p = Pipeline::new(&dir, cfg.clone()).unwrap();
        let ps = p.profiles(cfg.order).unwrap();
        let init = p.initial(&ps).unwrap();
        let traj = p.evolve(&init).unwrap();
        p.decompose(&traj, &ps, &init.state0).unwrap();
        let m: RunManifest = read_json(&dir.join(MANIFEST)).unwrap();
        assert_eq!(m.conserved, traj.conserved);
        m.stages
            .into_iter()
            .map(|(k, r)| (k, r.key, r.outputs))
            .collect::<Vec<_>>()
    };
    assert_eq!(hashes("pipeline-determinism-a"), hashes("pipeline-determinism-b"));
}

#[test]
fn report_needs_a_verify_stage() {
    let dir = fresh_dir("pipeline-no-verify");
    assert_eq!(gkdv::report::emit_report(&dir).unwrap_err().exit_code(), 2);
    let mut p = Pipeline::new(&dir, small_config()).unwrap();
    p.profiles(3).unwrap();
    let e = gkdv::report::emit_report(&dir).unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert!(e.to_string().contains("verify"), "{e}");
}
