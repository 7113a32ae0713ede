use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use gkdv::io::{grid_function_to_csv, write_text};
use gkdv_core::grid::Grid;
use gkdv_core::soliton;

fn dir(name: &str) -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn gkdv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gkdv")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn spectrum_reports_one_negative_direction() {
    let o = gkdv(&["spectrum"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["n_negative"], 1);
    assert_eq!(v["kernel_dim"], 1);
    assert!(v["min_constrained_quadratic_form"].as_f64().unwrap() > 0.0);
}

#[test]
fn constants_are_written_and_printed() {
    let d = dir("cli-constants");
    let o = gkdv(&["--quiet", "--output-dir", d.to_str().unwrap(), "constants"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("constants.json")).unwrap()).unwrap();
    let l1 = v["l1_norm"].as_f64().unwrap();
    assert!((l1 - soliton::l1_closed_form()).abs() < 1e-8);
    assert!((v["pq_pairing"].as_f64().unwrap() - l1 * l1 / 16.0).abs() < 1e-4);
    assert_eq!(stdout(&o), fs::read_to_string(d.join("constants.json")).unwrap());
}

#[test]
fn configuration_errors_exit_with_two() {
    let d = dir("cli-config");
    for args in [
        vec!["profiles", "nonsense=1"],
        vec!["profiles", "K=2"],
        vec!["profiles", "gamma"],
    ] {
        let mut full = vec!["--output-dir", d.to_str().unwrap()];
        full.extend(args.iter());
        let o = gkdv(&full);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    let cfg = d.join("run.cfg");
    fs::write(&cfg, "n = 100\nwhat = 3\n").unwrap();
    let o = gkdv(&["--config", cfg.to_str().unwrap(), "profiles"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_without_a_stored_run_is_a_configuration_error() {
    let d = dir("cli-verify-empty");
    let o = gkdv(&["--quiet", "--output-dir", d.to_str().unwrap(), "verify"]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn decompose_a_single_snapshot() {
    let d = dir("cli-decompose");
    let g = Grid::line_with_spacing(-60.0, 40.0, 1.0 / 64.0).unwrap();
    let (l, x) = (0.8, 1.5);
    let u = g.sample(|y| soliton::q((y - x) / l) / l.sqrt());
    let input = d.join("u.csv");
    write_text(&input, &grid_function_to_csv(&u, "x")).unwrap();
    let o = gkdv(&[
        "--quiet",
        "--output-dir",
        d.to_str().unwrap(),
        "decompose",
        "--input",
        input.to_str().unwrap(),
        "--guess",
        "0.82,1.45,0",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = stdout(&o);
    let field = |name: &str| -> f64 {
        let rest = out.split(&format!("{name} = ")).nth(1).unwrap();
        rest.split(',').next().unwrap().trim().parse().unwrap()
    };
    assert!((field("lambda") - l).abs() < 1e-8, "{out}");
    assert!((field("x") - x).abs() < 1e-8);
    assert!(field("b").abs() < 1e-8);
    assert!(d.join("u_eps.csv").exists());
}

#[test]
fn single_snapshot_needs_three_guess_values() {
    let d = dir("cli-decompose-guess");
    let o = gkdv(&[
        "--output-dir",
        d.to_str().unwrap(),
        "decompose",
        "--input",
        "u.csv",
        "--guess",
        "1,-0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
