//! Staged run: profiles → initial data → evolution → decomposition → verification.
//!
//! Every stage persists its artifacts under the run directory and records an input key and
//! the content hash of each output in `manifest.json`. A stage whose key matches and whose
//! outputs still hash to the recorded values is loaded from disk instead of recomputed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gkdv_core::asymptotics::{analyze, integral_checks, AnalysisOptions, AsymptoticsReport, WindowedIntegral};
use gkdv_core::evolver::{evolve_with, minimal_mass_initial_data, ConservedSample, InitialData, Snapshot, Trajectory};
use gkdv_core::grid::GridFunction;
use gkdv_core::modulation::{track, DecomposeOptions, ModulationState, Tracking};
use gkdv_core::profiles::{build_profiles, default_profile_grid, ProfileSet};
use gkdv_core::soliton::SolitonConstants;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::checks::{self, Criterion};
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};
use crate::fft::RustFft;
use crate::io::{
    content_hash, grid_function_from_csv, grid_function_to_csv, hash_file, read_json, read_text, to_json, write_text,
};
use crate::report;

pub const MANIFEST: &str = "manifest.json";
/// Window starts beyond `X_max` reported for information only.
pub const OUTSIDE_WINDOW_XS: [f64; 1] = [100.0];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub key: String,
    /// Relative path → content hash.
    pub outputs: BTreeMap<String, String>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub config: RunConfig,
    pub stages: BTreeMap<String, StageRecord>,
    /// Mass, energy and mean of the evolved field at every snapshot.
    #[serde(default)]
    pub conserved: Vec<ConservedSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveSummary {
    pub times: Vec<f64>,
    pub dt: f64,
    pub snapshot_stride: usize,
    pub rescaled_step: Option<f64>,
    pub max_relative_mass_drift: f64,
    pub max_relative_energy_drift: f64,
    pub max_mean_drift: f64,
    pub fft_length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub report: AsymptoticsReport,
    pub outside_window: Vec<WindowedIntegral>,
    pub criteria: Vec<Criterion>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(Criterion::passed)
    }
}

pub struct Pipeline {
    pub dir: PathBuf,
    pub config: RunConfig,
    pub verbose: bool,
    pool: rayon::ThreadPool,
    manifest: RunManifest,
}

fn stage_key(parts: &[&str]) -> String {
    content_hash(parts.join("\u{1f}").as_bytes())
}

impl Pipeline {
    pub fn new(dir: impl Into<PathBuf>, config: RunConfig) -> CliResult<Self> {
        config.validate()?;
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
        let path = dir.join(MANIFEST);
        let (stages, conserved) = match read_json::<RunManifest>(&path) {
            Ok(m) if path.exists() => (m.stages, m.conserved),
            _ => (BTreeMap::new(), Vec::new()),
        };
        let manifest = RunManifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            stages,
            conserved,
        };
        Ok(Pipeline {
            dir,
            config,
            verbose: false,
            pool,
            manifest,
        })
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    fn log(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.join(rel)
    }

    /// True when the stage ran with this key and its outputs are intact.
    fn is_fresh(&self, stage: &str, key: &str) -> bool {
        let Some(rec) = self.manifest.stages.get(stage) else {
            return false;
        };
        if rec.key != key || rec.outputs.is_empty() {
            return false;
        }
        let items: Vec<(&String, &String)> = rec.outputs.iter().collect();
        self.pool.install(|| {
            items
                .par_iter()
                .all(|(rel, hash)| hash_file(&self.dir.join(rel)).is_ok_and(|h| &h == *hash))
        })
    }

    fn record(
        &mut self,
        stage: &str,
        key: String,
        outputs: BTreeMap<String, String>,
        started: Instant,
    ) -> CliResult<()> {
        self.manifest.stages.insert(
            stage.to_string(),
            StageRecord {
                key,
                outputs,
                seconds: started.elapsed().as_secs_f64(),
            },
        );
        self.manifest.config = self.config.clone();
        let text = to_json(&self.manifest)?;
        write_text(&self.path(MANIFEST), &text)?;
        Ok(())
    }

    /// Writes all `(relative path, text)` pairs in parallel and returns their hashes.
    fn write_all(&self, files: Vec<(String, String)>) -> CliResult<BTreeMap<String, String>> {
        let hashed: CliResult<Vec<(String, String)>> = self.pool.install(|| {
            files
                .into_par_iter()
                .map(|(rel, text)| write_text(&self.dir.join(&rel), &text).map(|h| (rel, h)))
                .collect()
        });
        Ok(hashed?.into_iter().collect())
    }

    fn load<T: DeserializeOwned>(&self, rel: &str) -> CliResult<T> {
        read_json(&self.path(rel))
    }

    fn profiles_key(order: usize) -> String {
        let g = default_profile_grid();
        stage_key(&[
            "profiles",
            env!("CARGO_PKG_VERSION"),
            &order.to_string(),
            &format!("{g:?}"),
        ])
    }

    /// Profiles of order `K`, stored under `profiles/K{K}/`.
    pub fn profiles(&mut self, order: usize) -> CliResult<ProfileSet> {
        let stage = format!("profiles-K{order}");
        let key = Self::profiles_key(order);
        let set_rel = format!("profiles/K{order}/profile_set.json");
        if self.is_fresh(&stage, &key) {
            self.log(format!("{stage}: cached"));
            return self.load(&set_rel);
        }
        let started = Instant::now();
        self.log(format!("{stage}: building"));
        let ps = build_profiles(order, &default_profile_grid())?;
        let mut files = vec![
            (set_rel, to_json(&ps)?),
            (
                format!("profiles/K{order}/summary.json"),
                to_json(&ProfileSummary::of(&ps))?,
            ),
        ];
        for k in 1..=order {
            files.push((
                format!("profiles/K{order}/P{k}.csv"),
                grid_function_to_csv(&ps.profiles[k - 1], "y"),
            ));
        }
        let outputs = self.write_all(files)?;
        self.record(&stage, key, outputs, started)?;
        Ok(ps)
    }

    fn initial_key(&self) -> String {
        let c = &self.config;
        stage_key(&[
            "initial",
            &Self::profiles_key(c.order),
            &c.n.to_string(),
            &c.gamma.to_string(),
            &format!("{:?}{}", c.domain, c.spacing),
        ])
    }

    pub fn initial(&mut self, ps: &ProfileSet) -> CliResult<InitialData> {
        let key = self.initial_key();
        if self.is_fresh("initial", &key) {
            self.log("initial: cached");
            let u0 = grid_function_from_csv(&read_text(&self.path("initial/u0.csv"))?)?;
            let state0: ModulationState = self.load("initial/state0.json")?;
            return Ok(InitialData {
                u0,
                t_start: state0.time_label,
                state0,
            });
        }
        let started = Instant::now();
        let init = minimal_mass_initial_data(self.config.n as usize, ps, self.config.gamma, &self.config.grid()?)?;
        let outputs = self.write_all(vec![
            ("initial/u0.csv".into(), grid_function_to_csv(&init.u0, "x")),
            ("initial/state0.json".into(), to_json(&init.state0)?),
        ])?;
        self.record("initial", key, outputs, started)?;
        Ok(init)
    }

    fn evolve_key(&self) -> CliResult<String> {
        let cfg = self.config.evolver_config()?;
        Ok(stage_key(&[
            "evolve",
            &self.initial_key(),
            &self.config.t_end.to_string(),
            &format!("{cfg:?}"),
        ]))
    }

    fn snapshot_rel(i: usize) -> String {
        format!("evolve/snapshots/snap_{i:04}.csv")
    }

    pub fn evolve(&mut self, init: &InitialData) -> CliResult<Trajectory> {
        let key = self.evolve_key()?;
        if self.is_fresh("evolve", &key) {
            self.log("evolve: cached");
            let summary: EvolveSummary = self.load("evolve/summary.json")?;
            let conserved: Vec<ConservedSample> = self.load("evolve/conserved.json")?;
            self.manifest.conserved = conserved.clone();
            let snapshots: CliResult<Vec<Snapshot>> = self.pool.install(|| {
                summary
                    .times
                    .par_iter()
                    .enumerate()
                    .map(|(i, &time)| {
                        let u = grid_function_from_csv(&read_text(&self.path(&Self::snapshot_rel(i)))?)?;
                        Ok(Snapshot { time, u })
                    })
                    .collect()
            });
            return Ok(Trajectory {
                snapshots: snapshots?,
                conserved,
                modulation: None,
            });
        }
        let started = Instant::now();
        let cfg = self.config.evolver_config()?;
        self.log(format!(
            "evolve: {} points, t in [{:.4}, {}], base dt {:.3e}, stride {}",
            cfg.grid.len(),
            cfg.t_start,
            cfg.t_end,
            cfg.steps().1,
            cfg.snapshot_stride
        ));
        let verbose = self.verbose;
        let mut count = 0usize;
        let traj = evolve_with(&init.u0, &cfg, &RustFft, |t, t_end| {
            count += 1;
            if verbose && count % 10 == 0 {
                eprintln!("  t = {t:.4} / {t_end} ({:.0} s)", started.elapsed().as_secs_f64());
            }
        })?;
        let summary = EvolveSummary {
            times: traj.snapshots.iter().map(|s| s.time).collect(),
            dt: cfg.steps().1,
            snapshot_stride: cfg.snapshot_stride,
            rescaled_step: cfg.rescaled_step,
            max_relative_mass_drift: traj.max_relative_mass_drift(),
            max_relative_energy_drift: traj.max_relative_energy_drift(),
            max_mean_drift: traj.max_mean_drift(),
            fft_length: gkdv_core::evolver::FftProvider::fast_len(&RustFft, cfg.dealias_padding * cfg.grid.len()),
        };
        let mut files = vec![
            ("evolve/summary.json".to_string(), to_json(&summary)?),
            ("evolve/conserved.json".to_string(), to_json(&traj.conserved)?),
        ];
        files.extend(
            traj.snapshots
                .iter()
                .enumerate()
                .map(|(i, s)| (Self::snapshot_rel(i), grid_function_to_csv(&s.u, "x"))),
        );
        let outputs = self.write_all(files)?;
        self.manifest.conserved = traj.conserved.clone();
        self.record("evolve", key, outputs, started)?;
        self.log(format!(
            "evolve: done in {:.0} s, mass drift {:.2e}, energy drift {:.2e}",
            started.elapsed().as_secs_f64(),
            summary.max_relative_mass_drift,
            summary.max_relative_energy_drift
        ));
        Ok(traj)
    }

    fn decompose_options(&self) -> DecomposeOptions {
        DecomposeOptions {
            gamma: Some(self.config.gamma),
            delta0: self.config.delta0,
            ..DecomposeOptions::default()
        }
    }

    fn decompose_key(&self) -> CliResult<String> {
        Ok(stage_key(&[
            "decompose",
            &self.evolve_key()?,
            &self.config.delta0.to_string(),
        ]))
    }

    pub fn decompose(&mut self, traj: &Trajectory, ps: &ProfileSet, start: &ModulationState) -> CliResult<Tracking> {
        let key = self.decompose_key()?;
        if self.is_fresh("decompose", &key) {
            self.log("decompose: cached");
            return self.load("decompose/tracking.json");
        }
        let started = Instant::now();
        let tracking = track(
            traj.snapshots.iter().map(|s| (s.time, &s.u)),
            ps,
            start,
            &self.decompose_options(),
        )?;
        let mut table = String::from("# t,lambda,x,b,eps_h1,iterations\n");
        for (s, e) in tracking.states.iter().zip(&tracking.epsilon_norms) {
            table.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                s.time_label, s.lambda, s.x_center, s.b, e, s.iterations
            ));
        }
        let mut files = vec![
            ("decompose/tracking.json".to_string(), to_json(&tracking)?),
            ("decompose/states.csv".to_string(), table),
        ];
        files.extend(tracking.states.iter().enumerate().map(|(i, s)| {
            (
                format!("decompose/eps/eps_{i:04}.csv"),
                grid_function_to_csv(&s.epsilon, "y"),
            )
        }));
        let outputs = self.write_all(files)?;
        self.record("decompose", key, outputs, started)?;
        self.log(format!(
            "decompose: {} states, stopped: {}",
            tracking.states.len(),
            tracking
                .stopped
                .as_ref()
                .map_or("no".to_string(), |s| format!("t = {:.4}", s.time))
        ));
        Ok(tracking)
    }

    pub fn analysis_options(&self) -> AnalysisOptions {
        let mut o = AnalysisOptions::for_start_time(self.config.t_start(), self.config.t_end);
        let x_max = self.config.x_max();
        o.x_max = x_max;
        if let Some(first) = o.windowed_xs.first_mut() {
            *first = first.min(x_max);
        }
        if let Some(last) = o.windowed_xs.last_mut() {
            *last = x_max;
        }
        o
    }

    /// Runs the post-processing and all eight criteria.
    pub fn verify(&mut self, traj: &Trajectory, tracking: &Tracking, ps: &ProfileSet) -> CliResult<Verification> {
        let key = stage_key(&[
            "verify",
            env!("CARGO_PKG_VERSION"),
            &self.decompose_key()?,
            &format!("{:?}", self.analysis_options()),
        ]);
        if self.is_fresh("verify", &key) {
            self.log("verify: cached");
            return Ok(Verification {
                report: self.load("verify/report.json")?,
                criteria: self.load("verify/criteria.json")?,
                outside_window: self.load("verify/outside_window.json")?,
            });
        }
        let started = Instant::now();
        let consts = SolitonConstants::compute().with_pq_pairing(ps.pq_pairing());
        let mut traj = traj.clone();
        traj.modulation = Some(tracking.states.clone());
        let opts = self.analysis_options();
        let report = analyze(&traj, ps, &consts, &opts)?;
        let tail_snap = traj
            .snapshots
            .iter()
            .min_by(|a, b| {
                (a.time - opts.tail_time)
                    .abs()
                    .total_cmp(&(b.time - opts.tail_time).abs())
            })
            .ok_or_else(|| CliError::Format("trajectory has no snapshots".into()))?;
        let fits: Vec<f64> = OUTSIDE_WINDOW_XS
            .iter()
            .copied()
            .filter(|&x| -x >= tail_snap.u.grid().left())
            .collect();
        let outside = integral_checks(&tail_snap.u, tail_snap.time, &consts, opts.x_max, &fits)?.windowed_integrals;

        let k2 = self.profiles(2)?;
        let k4 = if ps.order >= 4 { ps.clone() } else { self.profiles(4)? };
        let k3 = if ps.order == 3 { ps.clone() } else { self.profiles(3)? };
        let gamma = self.config.gamma;
        let mut dynamics = checks::dynamics(&traj, &report);
        checks::note_tracking(&mut dynamics, tracking);
        let criteria = vec![
            checks::soliton_identities()?,
            checks::operator_identities()?,
            checks::profile_recursion(&k4, &consts)?,
            checks::residual_scaling(&[&k2, &k3], gamma)?,
            checks::modulation(&k3, gamma)?,
            dynamics,
            checks::time_asymptotics(&report),
            checks::space_asymptotics(&report, &consts, opts.x_max, &outside),
        ];
        let v = Verification {
            report,
            outside_window: outside,
            criteria,
        };
        let files = vec![
            ("verify/report.json".to_string(), to_json(&v.report)?),
            ("verify/criteria.json".to_string(), to_json(&v.criteria)?),
            ("verify/outside_window.json".to_string(), to_json(&v.outside_window)?),
            ("verify/tail.dat".to_string(), report::tail_table(&v.report)),
            ("verify/residuals.dat".to_string(), report::residual_table(&v.report)),
            (report::REPORT.to_string(), report::markdown(&self.config, &v)),
        ];
        let outputs = self.write_all(files)?;
        self.record("verify", key, outputs, started)?;
        Ok(v)
    }

    /// All stages in order.
    pub fn run(&mut self) -> CliResult<(Trajectory, Tracking, Verification)> {
        let ps = self.profiles(self.config.order)?;
        let init = self.initial(&ps)?;
        let traj = self.evolve(&init)?;
        let tracking = self.decompose(&traj, &ps, &init.state0)?;
        let v = self.verify(&traj, &tracking, &ps)?;
        Ok((traj, tracking, v))
    }

    /// Re-runs verification on the stored trajectory of a previous run.
    pub fn verify_stored(&mut self) -> CliResult<Verification> {
        let ps = self.profiles(self.config.order)?;
        let init = self.initial(&ps)?;
        if !self.is_fresh("evolve", &self.evolve_key()?) {
            return Err(CliError::Config(format!(
                "{} holds no evolution for this configuration; run `gkdv evolve` first",
                self.dir.display()
            )));
        }
        let traj = self.evolve(&init)?;
        let tracking = self.decompose(&traj, &ps, &init.state0)?;
        self.verify(&traj, &tracking, &ps)
    }
}

/// Scalar content of a profile set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub order: usize,
    pub betas: Vec<f64>,
    pub pq_pairing: f64,
    pub left_coeffs: Vec<Vec<f64>>,
    pub d_coeffs: Vec<Vec<f64>>,
    pub solvability: Vec<f64>,
}

impl ProfileSummary {
    pub fn of(ps: &ProfileSet) -> Self {
        ProfileSummary {
            order: ps.order,
            betas: ps.betas.clone(),
            pq_pairing: ps.pq_pairing(),
            left_coeffs: ps.left_coeffs.clone(),
            d_coeffs: ps.d_coeffs.clone(),
            solvability: ps.solvability.clone(),
        }
    }
}

/// Reads a snapshot CSV written by the pipeline.
pub fn read_snapshot(path: &Path) -> CliResult<GridFunction> {
    grid_function_from_csv(&read_text(path)?)
}
