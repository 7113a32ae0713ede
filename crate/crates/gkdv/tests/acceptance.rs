//! Acceptance suite. The n = 100 run is computed once per target directory and reused;
//! the first invocation takes several minutes.

use std::path::PathBuf;
use std::sync::OnceLock;

use gkdv::checks::Criterion;
use gkdv::config::RunConfig;
use gkdv::io::read_json;
use gkdv::pipeline::{Pipeline, RunManifest, Verification, MANIFEST};
use gkdv::report::{emit_report, REPORT};

fn run_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-run")
}

fn verification() -> &'static Verification {
    static V: OnceLock<Verification> = OnceLock::new();
    V.get_or_init(|| {
        let mut p = Pipeline::new(run_dir(), RunConfig::default()).expect("run directory");
        p.verbose = true;
        let (_, _, v) = p.run().expect("pipeline");
        v
    })
}

fn manifest() -> RunManifest {
    read_json(&run_dir().join(MANIFEST)).unwrap()
}

fn check(id: u8) {
    let c: &Criterion = verification()
        .criteria
        .iter()
        .find(|c| c.id == id)
        .expect("criterion present");
    println!("{}", c.summary_line());
    for ch in &c.checks {
        println!("    [{}] {}", if ch.passed { "ok" } else { "FAIL" }, ch.describe());
    }
    for n in &c.notes {
        println!("    note: {n}");
    }
    assert!(c.passed(), "{}", c.summary_line());
}

#[test]
fn soliton_identities() {
    check(1);
}

#[test]
fn operator_identities() {
    check(2);
}

#[test]
fn profile_recursion() {
    check(3);
}

#[test]
fn residual_scaling() {
    check(4);
}

#[test]
fn modulation_equations() {
    check(5);
}

#[test]
fn conservation_and_parameter_laws() {
    check(6);
}

#[test]
fn convergence_to_the_profile() {
    check(7);
}

#[test]
fn left_tail() {
    check(8);
}

#[test]
fn rerun_recomputes_nothing() {
    let first = verification().clone();
    let before = manifest();
    let mut p = Pipeline::new(run_dir(), RunConfig::default()).unwrap();
    let (_, _, again) = p.run().unwrap();
    assert_eq!(again, first);
    let after = manifest();
    for (stage, rec) in &before.stages {
        assert_eq!(after.stages[stage], *rec, "{stage} ran again");
    }
}

#[test]
fn report_regeneration_is_deterministic() {
    verification();
    let path = run_dir().join(REPORT);
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(emit_report(&run_dir()).unwrap(), path);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), written);
    for c in &verification().criteria {
        assert!(written.contains(&c.summary_line()));
    }
}
