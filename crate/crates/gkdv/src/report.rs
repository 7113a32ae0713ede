//! Plain-text tables and the markdown run report.

use std::fmt::Write;
use std::path::{Path, PathBuf};

use gkdv_core::asymptotics::AsymptoticsReport;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::io::{read_json, write_text};
use crate::pipeline::{RunManifest, Verification, MANIFEST};

pub const REPORT: &str = "report.md";

/// `x  u(t,x)  prediction` over the tail window.
pub fn tail_table(r: &AsymptoticsReport) -> String {
    let mut s = format!(
        "# t = {:.6}, window [{:.4}, {:.4}], plateau {:.8}, prediction {:.8}\n# x u_scaled\n",
        r.tail.t, r.tail.window.0, r.tail.window.1, r.tail.plateau, r.tail.prediction
    );
    for (x, v) in &r.tail.samples {
        let _ = writeln!(s, "{x:.10e} {v:.10e}");
    }
    s
}

/// `t  m  residual  control`.
pub fn residual_table(r: &AsymptoticsReport) -> String {
    let mut s = String::from("# t m residual control\n");
    for a in &r.residual_series {
        let control = r
            .control_series
            .iter()
            .find(|c| c.m == a.m && c.t == a.t)
            .map_or(f64::NAN, |c| c.residual);
        let _ = writeln!(s, "{:.10e} {} {:.10e} {:.10e}", a.t, a.m, a.residual, control);
    }
    s
}

/// Rebuilds `report.md` from the stored verification of a run directory.
pub fn emit_report(run_dir: &Path) -> CliResult<PathBuf> {
    let manifest_path = run_dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(CliError::Config(format!("{} has no {MANIFEST}", run_dir.display())));
    }
    let manifest: RunManifest = read_json(&manifest_path)?;
    if !manifest.stages.contains_key("verify") {
        return Err(CliError::Config(format!(
            "{} is missing the verify stage; run `gkdv verify` first",
            run_dir.display()
        )));
    }
    let v = Verification {
        report: read_json(&run_dir.join("verify/report.json"))?,
        criteria: read_json(&run_dir.join("verify/criteria.json"))?,
        outside_window: read_json(&run_dir.join("verify/outside_window.json"))?,
    };
    let path = run_dir.join(REPORT);
    write_text(&path, &markdown(&manifest.config, &v))?;
    Ok(path)
}

pub fn markdown(cfg: &RunConfig, v: &Verification) -> String {
    let r = &v.report;
    let f = &r.fit;
    let mut s = String::from("# Run report\n\n## Configuration\n\n```text\n");
    s.push_str(&cfg.to_text());
    s.push_str("```\n\n## Criteria\n\n");
    for c in &v.criteria {
        let _ = writeln!(s, "### {}\n", c.summary_line());
        for ch in &c.checks {
            let _ = writeln!(s, "- [{}] {}", if ch.passed { "x" } else { " " }, ch.describe());
        }
        for n in &c.notes {
            let _ = writeln!(s, "- note: {n}");
        }
        s.push('\n');
    }
    s.push_str("## Fitted parameters\n\n| quantity | value |\n|---|---|\n");
    let rows = [
        ("ℓ₀ (kinematic)", f.ell0),
        ("ℓ₀ (energy)", r.ell0_energy),
        ("ℓ₀ (from b)", f.ell0_from_b),
        ("t*", f.t_star),
        ("x₀", r.x0),
        ("c₀", r.c0),
        ("λ₀", f.lambda0),
        ("β₃ dynamic", r.beta3_dynamic),
        ("β₃ profile", r.beta3_profile),
        ("b/λ² limit", r.b_over_lambda2_limit),
        ("κ", r.bs_kappa),
        ("tail plateau", r.tail.plateau),
        ("tail prediction", r.tail.prediction),
    ];
    for (k, x) in rows {
        let _ = writeln!(s, "| {k} | {x:.6} |");
    }
    let _ = writeln!(s, "\nFit window: t in [{:.4}, {:.4}].", f.t_range.0, f.t_range.1);
    if !v.outside_window.is_empty() {
        s.push_str("\n## Windows beyond X_max (informational)\n\n");
        for w in &v.outside_window {
            let _ = writeln!(
                s,
                "- X = {}: measured {:.4}, prediction {:.4}",
                w.x, w.value, w.prediction
            );
        }
    }
    s
}
