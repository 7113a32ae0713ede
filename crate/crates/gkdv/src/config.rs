//! Run configuration: a flat `key = value` file, overridable key by key.
//!
//! ```text
//! # defaults of the n = 100 acceptance run
//! n = 100
//! K = 3
//! t_end = 0.4
//! domain = -192, 64
//! spacing = 0.015625
//! ```

use std::path::Path;

use gkdv_core::evolver::{bootstrap_parameters, EvolverConfig, MAX_CFL};
use gkdv_core::grid::Grid;
use gkdv_core::modulation::DEFAULT_DELTA0;
use gkdv_core::profiles::{DEFAULT_GAMMA, MAX_ORDER};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::read_text;

pub const KEYS: &[&str] = &[
    "n",
    "K",
    "gamma",
    "t_end",
    "dt",
    "cfl",
    "spacing",
    "domain",
    "snapshots",
    "snapshot_stride",
    "rescaled_step",
    "padding",
    "delta0",
    "x_max",
    "seed",
    "threads",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Index of the bootstrap data; the run starts at `T_n = n^{-1/2}`.
    pub n: u32,
    /// Profile order `K`.
    #[serde(rename = "K")]
    pub order: usize,
    pub gamma: f64,
    pub t_end: f64,
    /// Base step; `None` means `cfl·h³`.
    pub dt: Option<f64>,
    pub cfl: f64,
    pub spacing: f64,
    pub domain: (f64, f64),
    /// Number of snapshot intervals when `snapshot_stride` is automatic.
    pub snapshots: usize,
    pub snapshot_stride: Option<usize>,
    /// `σ` in `dt ≤ σλ³`; `None` disables the cap.
    pub rescaled_step: Option<f64>,
    pub padding: usize,
    pub delta0: f64,
    /// Left end of the formed tail; `None` means `1/T_n`.
    pub x_max: Option<f64>,
    pub seed: u64,
    /// Worker threads for artifact IO; 0 lets the pool decide.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 100,
            order: 3,
            gamma: DEFAULT_GAMMA,
            t_end: 0.4,
            dt: None,
            cfl: MAX_CFL,
            spacing: 1.0 / 64.0,
            domain: (-192.0, 64.0),
            snapshots: 60,
            snapshot_stride: None,
            rescaled_step: Some(2.5e-4),
            padding: 3,
            delta0: DEFAULT_DELTA0,
            x_max: None,
            seed: 0,
            threads: 0,
        }
    }
}

fn bad(key: &str, value: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{key} = {value}: {why}"))
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<T>
where
    T::Err: std::fmt::Display,
{
    value.parse::<T>().map_err(|e| bad(key, value, e))
}

fn optional<T: std::str::FromStr>(key: &str, value: &str) -> CliResult<Option<T>>
where
    T::Err: std::fmt::Display,
{
    match value {
        "auto" | "none" => Ok(None),
        v => num(key, v).map(Some),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = read_text(path)?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> CliResult<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    /// Applies `key=value`.
    pub fn apply_override(&mut self, item: &str) -> CliResult<()> {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override '{item}' is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> CliResult<()> {
        match key {
            "n" => self.n = num(key, value)?,
            "K" | "order" => self.order = num(key, value)?,
            "gamma" => self.gamma = num(key, value)?,
            "t_end" => self.t_end = num(key, value)?,
            "dt" => self.dt = optional(key, value)?,
            "cfl" => self.cfl = num(key, value)?,
            "spacing" => self.spacing = num(key, value)?,
            "domain" => {
                let (a, b) = value
                    .split_once(',')
                    .ok_or_else(|| bad(key, value, "expected 'left, right'"))?;
                self.domain = (num(key, a.trim())?, num(key, b.trim())?);
            }
            "snapshots" => self.snapshots = num(key, value)?,
            "snapshot_stride" => self.snapshot_stride = optional(key, value)?,
            "rescaled_step" => self.rescaled_step = optional(key, value)?,
            "padding" => self.padding = num(key, value)?,
            "delta0" => self.delta0 = num(key, value)?,
            "x_max" => self.x_max = optional(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "threads" => self.threads = num(key, value)?,
            other => {
                return Err(CliError::Config(format!(
                    "unknown key '{other}' (known: {})",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> CliResult<()> {
        let err = |m: String| Err(CliError::Config(m));
        if self.n < 5 {
            return err(format!("n = {} must be at least 5", self.n));
        }
        if !(3..=MAX_ORDER).contains(&self.order) {
            return err(format!("K = {} must lie in 3..={MAX_ORDER}", self.order));
        }
        if !(self.gamma > 0.85 && self.gamma <= 1.0) {
            return err(format!("gamma = {} outside (17/20, 1]", self.gamma));
        }
        if !(self.t_end > self.t_start()) {
            return err(format!("t_end = {} must exceed T_n = {}", self.t_end, self.t_start()));
        }
        if !(self.spacing > 0.0) || !(self.domain.1 > self.domain.0) {
            return err("spacing and domain must be positive".into());
        }
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return err(format!("cfl = {} outside (0, {MAX_CFL}]", self.cfl));
        }
        if self.snapshots < 4 {
            return err("at least 4 snapshots are needed".into());
        }
        if !(self.delta0 > 0.0) {
            return err("delta0 must be positive".into());
        }
        if self.rescaled_step.is_some_and(|s| !(s > 0.0)) {
            return err("rescaled_step must be positive".into());
        }
        Ok(())
    }

    pub fn t_start(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    /// `1/T_n` unless set.
    pub fn x_max(&self) -> f64 {
        self.x_max.unwrap_or_else(|| 1.0 / self.t_start())
    }

    pub fn grid(&self) -> CliResult<Grid> {
        Ok(Grid::periodic_with_spacing(self.domain.0, self.domain.1, self.spacing)?)
    }

    pub fn evolver_config(&self) -> CliResult<EvolverConfig> {
        let grid = self.grid()?;
        let h = grid.spacing();
        let dt = self.dt.unwrap_or(self.cfl * h * h * h);
        let span = self.t_end - self.t_start();
        let stride = self
            .snapshot_stride
            .unwrap_or_else(|| ((span / self.snapshots as f64) / dt).round().max(1.0) as usize);
        let mut cfg = EvolverConfig::new(grid, self.t_start(), self.t_end, self.cfl, stride);
        cfg.dt = dt;
        cfg.dealias_padding = self.padding;
        cfg.rescaled_step = self.rescaled_step;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Bootstrap parameters `(λ_n, b_n, x_n, T_n)` for a given `β₃`.
    pub fn bootstrap(&self, beta3: f64) -> CliResult<(f64, f64, f64, f64)> {
        Ok(bootstrap_parameters(self.n as usize, beta3)?)
    }

    pub fn to_text(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x}"));
        format!(
            "n = {}\nK = {}\ngamma = {}\nt_end = {}\ndt = {}\ncfl = {}\nspacing = {}\ndomain = {}, {}\nsnapshots = {}\nsnapshot_stride = {}\nrescaled_step = {}\npadding = {}\ndelta0 = {}\nx_max = {}\nseed = {}\nthreads = {}\n",
            self.n,
            self.order,
            self.gamma,
            self.t_end,
            opt(self.dt),
            self.cfl,
            self.spacing,
            self.domain.0,
            self.domain.1,
            self.snapshots,
            self.snapshot_stride.map_or("auto".to_string(), |s| s.to_string()),
            self.rescaled_step.map_or("none".to_string(), |s| format!("{s}")),
            self.padding,
            self.delta0,
            opt(self.x_max),
            self.seed,
            self.threads
        )
    }
}
