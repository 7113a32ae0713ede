//! Pseudo-spectral integration of `u_t + (u_xx + u⁵)_x = 0` on a periodic window.
//!
//! In mode space `û_t = ik³û - ik·(u⁵)^`. The linear part is integrated exactly
//! (integrating factor) and the nonlinear part by classical RK4. The quintic product
//! is formed on a zero-padded grid so that it is alias-free.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::RealFft;
use crate::grid::{integrate_samples, wavenumbers, Grid, GridFunction};
use crate::modulation::{default_reference_grid, reconstruct, ModulationState};
use crate::profiles::ProfileSet;
use crate::soliton;

/// Largest admissible `dt / h³`.
pub const MAX_CFL: f64 = 1.5;
/// `‖u‖_∞` above which a run is declared blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvolverConfig {
    pub grid: Grid,
    /// Upper bound on the step; the actual step divides `t_end - t_start` evenly.
    pub dt: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub dealias_padding: usize,
    pub snapshot_stride: usize,
    /// Optional `σ`: steps are also capped by `σ·λ_eff³`, where `λ_eff` is the scale of a
    /// soliton with the current maximum. Concentrated solutions need steps of order `λ³`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub rescaled_step: Option<f64>,
}

impl EvolverConfig {
    /// Step `cfl·h³` with padding 3 and a snapshot every `stride` steps.
    pub fn new(grid: Grid, t_start: f64, t_end: f64, cfl: f64, stride: usize) -> Self {
        let h = grid.spacing();
        EvolverConfig {
            grid,
            dt: cfl * h * h * h,
            t_start,
            t_end,
            dealias_padding: 3,
            snapshot_stride: stride,
            rescaled_step: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.grid.is_periodic() {
            return Err(Error::Config("evolution needs a periodic grid".into()));
        }
        if self.grid.len() % 2 != 0 {
            return Err(Error::Config("evolution needs an even number of points".into()));
        }
        let h = self.grid.spacing();
        if !(self.dt > 0.0) || self.dt > MAX_CFL * h * h * h * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "dt = {:e} violates 0 < dt <= {MAX_CFL}·h³ = {:e}",
                self.dt,
                MAX_CFL * h * h * h
            )));
        }
        if !(self.t_end > self.t_start) || !self.t_start.is_finite() || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "bad time interval [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.dealias_padding < 3 {
            return Err(Error::Config(format!(
                "dealias padding {} < 3 aliases the quintic product",
                self.dealias_padding
            )));
        }
        if let Some(sigma) = self.rescaled_step {
            if !(sigma > 0.0) || !sigma.is_finite() {
                return Err(Error::Config(format!("rescaled step {sigma} must be positive")));
            }
        }
        if self.snapshot_stride == 0 {
            return Err(Error::Config("snapshot stride must be positive".into()));
        }
        Ok(())
    }

    /// Number of base steps and the base step actually taken.
    pub fn steps(&self) -> (usize, f64) {
        let span = self.t_end - self.t_start;
        let steps = libm::ceil(span / self.dt - 1e-9).max(1.0) as usize;
        (steps, span / steps as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConservedQuantities {
    pub mass: f64,
    pub energy: f64,
    /// `∫u`.
    pub mean: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConservedSample {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Snapshot {
    pub time: f64,
    pub u: GridFunction,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub snapshots: Vec<Snapshot>,
    pub conserved: Vec<ConservedSample>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub modulation: Option<Vec<ModulationState>>,
}

impl Trajectory {
    pub fn max_relative_mass_drift(&self) -> f64 {
        relative_drift(self.conserved.iter().map(|c| c.mass))
    }

    /// Energy drift relative to `max(|E(t_start)|, mass·1e-3)` so that near-zero energies
    /// do not blow the ratio up.
    pub fn max_relative_energy_drift(&self) -> f64 {
        let Some(first) = self.conserved.first() else {
            return 0.0;
        };
        let scale = first.energy.abs().max(1e-3 * first.mass);
        self.conserved
            .iter()
            .map(|c| (c.energy - first.energy).abs() / scale)
            .fold(0.0, f64::max)
    }

    pub fn max_mean_drift(&self) -> f64 {
        let Some(first) = self.conserved.first() else {
            return 0.0;
        };
        self.conserved
            .iter()
            .map(|c| (c.mean - first.mean).abs())
            .fold(0.0, f64::max)
    }
}

fn relative_drift(mut it: impl Iterator<Item = f64>) -> f64 {
    let Some(first) = it.next() else { return 0.0 };
    let scale = first.abs().max(f64::MIN_POSITIVE);
    it.map(|v| (v - first).abs() / scale).fold(0.0, f64::max)
}

pub fn conserved_quantities(u: &GridFunction) -> ConservedQuantities {
    ConservedQuantities {
        mass: soliton::mass(u),
        energy: soliton::energy(u),
        mean: integrate_samples(u.grid(), u.values()),
    }
}

/// A real-to-complex transform of fixed even length `n`: `forward` yields the `n/2 + 1`
/// non-negative frequencies, `inverse` is normalized. Both may clobber their input.
pub trait RealTransform {
    fn len(&self) -> usize;
    fn forward(&mut self, input: &mut [f64], out: &mut [Complex64]);
    fn inverse(&mut self, input: &mut [Complex64], out: &mut [f64]);
}

/// Builds transforms for the evolver.
pub trait FftProvider {
    fn real(&self, n: usize) -> Box<dyn RealTransform>;

    /// Smallest efficient even length `>= n`.
    fn fast_len(&self, n: usize) -> usize {
        n + n % 2
    }
}

/// The crate's own FFT.
#[derive(Debug, Clone, Copy, Default)]
pub struct BuiltinFft;

struct BuiltinReal {
    plan: RealFft,
    scratch: Vec<Complex64>,
}

impl RealTransform for BuiltinReal {
    fn len(&self) -> usize {
        self.plan.len()
    }

    fn forward(&mut self, input: &mut [f64], out: &mut [Complex64]) {
        self.plan.forward(input, out, &mut self.scratch);
    }

    fn inverse(&mut self, input: &mut [Complex64], out: &mut [f64]) {
        self.plan.inverse(input, out, &mut self.scratch);
    }
}

impl FftProvider for BuiltinFft {
    fn real(&self, n: usize) -> Box<dyn RealTransform> {
        Box::new(BuiltinReal {
            plan: RealFft::new(n),
            scratch: vec![Complex64::new(0.0, 0.0); n / 2],
        })
    }

    fn fast_len(&self, n: usize) -> usize {
        n.next_power_of_two().max(2)
    }
}

/// Mode-space workspace for one run.
struct Stepper {
    n: usize,
    padded: usize,
    small: Box<dyn RealTransform>,
    big: Box<dyn RealTransform>,
    ks: Vec<f64>,
    // -ik for the retained modes; the Nyquist mode is kept at zero
    minus_ik: Vec<Complex64>,
    half_step: Vec<Complex64>,
    full_step: Vec<Complex64>,
    dt: f64,
    phys: Vec<f64>,
    spec: Vec<Complex64>,
    peak: f64,
}

impl Stepper {
    fn new(grid: &Grid, padding: usize, fft: &dyn FftProvider) -> Self {
        let n = grid.len();
        let padded = fft.fast_len(padding * n);
        let ks: Vec<f64> = wavenumbers(grid)[..n / 2].to_vec();
        Stepper {
            n,
            padded,
            small: fft.real(n),
            big: fft.real(padded),
            minus_ik: ks.iter().map(|&k| Complex64::new(0.0, -k)).collect(),
            ks,
            half_step: Vec::new(),
            full_step: Vec::new(),
            dt: f64::NAN,
            phys: vec![0.0; padded],
            spec: vec![Complex64::new(0.0, 0.0); padded / 2 + 1],
            peak: 0.0,
        }
    }

    fn set_dt(&mut self, dt: f64) {
        if dt == self.dt {
            return;
        }
        let phase = |k: f64, tau: f64| {
            let a = k * k * k * tau;
            Complex64::new(libm::cos(a), libm::sin(a))
        };
        self.half_step = self.ks.iter().map(|&k| phase(k, 0.5 * dt)).collect();
        self.full_step = self.ks.iter().map(|&k| phase(k, dt)).collect();
        self.dt = dt;
    }

    fn to_modes(&mut self, u: &[f64]) -> Vec<Complex64> {
        let mut input = u.to_vec();
        let mut out = vec![Complex64::new(0.0, 0.0); self.n / 2 + 1];
        self.small.forward(&mut input, &mut out);
        out.truncate(self.n / 2);
        out
    }

    fn to_physical(&mut self, modes: &[Complex64]) -> Vec<f64> {
        let mut spec = modes.to_vec();
        spec.push(Complex64::new(0.0, 0.0));
        spec[0].im = 0.0;
        let mut out = vec![0.0; self.n];
        self.small.inverse(&mut spec, &mut out);
        out
    }

    /// `-ik·(u⁵)^` for the retained modes, also recording `max|u|` on the padded grid.
    fn nonlinear(&mut self, modes: &[Complex64], out: &mut [Complex64]) {
        let m = modes.len();
        let up = self.padded as f64 / self.n as f64;
        for (s, v) in self.spec.iter_mut().zip(modes) {
            *s = v * up;
        }
        self.spec[0].im = 0.0;
        for s in self.spec[m..].iter_mut() {
            *s = Complex64::new(0.0, 0.0);
        }
        self.big.inverse(&mut self.spec, &mut self.phys);
        let mut peak = 0.0f64;
        for v in self.phys.iter_mut() {
            let a = *v;
            peak = peak.max(a.abs());
            let a2 = a * a;
            *v = a2 * a2 * a;
        }
        self.peak = peak;
        self.big.forward(&mut self.phys, &mut self.spec);
        let down = 1.0 / up;
        for j in 0..m {
            out[j] = self.minus_ik[j] * self.spec[j] * down;
        }
    }

    fn step(&mut self, v: &mut [Complex64], ws: &mut [Vec<Complex64>; 5]) {
        let dt = self.dt;
        let [a, b, c, d, tmp] = ws;
        let h = 0.5 * dt;
        self.nonlinear(v, a);
        for j in 0..v.len() {
            tmp[j] = self.half_step[j] * (v[j] + h * a[j]);
        }
        self.nonlinear(tmp, b);
        for j in 0..v.len() {
            tmp[j] = self.half_step[j] * v[j] + h * b[j];
        }
        self.nonlinear(tmp, c);
        for j in 0..v.len() {
            tmp[j] = self.full_step[j] * v[j] + dt * self.half_step[j] * c[j];
        }
        self.nonlinear(tmp, d);
        for j in 0..v.len() {
            let e1 = self.half_step[j];
            let e2 = self.full_step[j];
            v[j] = e2 * v[j] + dt / 6.0 * (e2 * a[j] + 2.0 * e1 * (b[j] + c[j]) + d[j]);
        }
    }
}

/// `(Q(0)/peak)²`: the scale of a soliton whose maximum is `peak`.
pub fn effective_scale(peak: f64) -> f64 {
    let r = soliton::q_peak() / peak;
    r * r
}

/// Evolve `u0` over `[t_start, t_end]` with the built-in FFT.
pub fn evolve(u0: &GridFunction, cfg: &EvolverConfig) -> Result<Trajectory> {
    evolve_with(u0, cfg, &BuiltinFft, |_, _| {})
}

/// Evolve with a chosen FFT, calling `progress(time, t_end)` after each snapshot.
///
/// The run is cut into segments of `snapshot_stride·dt` (the last may be shorter) with a
/// snapshot at each end. Within a segment the step is constant: `dt`, or less when
/// `rescaled_step` caps it by `σ·λ_eff³` measured at the segment start.
pub fn evolve_with(
    u0: &GridFunction,
    cfg: &EvolverConfig,
    fft: &dyn FftProvider,
    mut progress: impl FnMut(f64, f64),
) -> Result<Trajectory> {
    cfg.validate()?;
    if !u0.grid().matches(&cfg.grid) {
        return Err(Error::GridMismatch);
    }
    if !u0.is_finite() {
        return Err(Error::InvalidInput("initial data has non-finite values".into()));
    }
    let (steps, dt) = cfg.steps();
    let mut stepper = Stepper::new(&cfg.grid, cfg.dealias_padding, fft);
    let mut v = stepper.to_modes(u0.values());
    let m = v.len();
    let mut ws: [Vec<Complex64>; 5] = core::array::from_fn(|_| vec![Complex64::new(0.0, 0.0); m]);

    let mut traj = Trajectory {
        snapshots: Vec::new(),
        conserved: Vec::new(),
        modulation: None,
    };
    let record = |traj: &mut Trajectory, time: f64, values: Vec<f64>| {
        let u = GridFunction::from_raw(cfg.grid, values);
        let c = conserved_quantities(&u);
        traj.conserved.push(ConservedSample {
            time,
            mass: c.mass,
            energy: c.energy,
            mean: c.mean,
        });
        traj.snapshots.push(Snapshot { time, u });
    };
    // the retained field has no Nyquist mode
    let first = stepper.to_physical(&v);
    let mut peak = first.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    record(&mut traj, cfg.t_start, first);

    let mut done = 0;
    let mut time = cfg.t_start;
    while done < steps {
        let base = cfg.snapshot_stride.min(steps - done);
        let seg_start = time;
        let seg_end = if done + base == steps {
            cfg.t_end
        } else {
            cfg.t_start + (done + base) as f64 * dt
        };
        let span = seg_end - seg_start;
        let mut sub = base;
        if let Some(sigma) = cfg.rescaled_step {
            let l = effective_scale(peak.max(f64::MIN_POSITIVE));
            let cap = sigma * l * l * l;
            sub = sub.max(libm::ceil(span / cap - 1e-9) as usize);
        }
        stepper.set_dt(span / sub as f64);
        for s in 1..=sub {
            stepper.step(&mut v, &mut ws);
            if !(stepper.peak <= BLOW_UP_THRESHOLD) || v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(Error::BlowUp {
                    last_valid_time: time,
                    reason: format!("sup|u| = {:e} in the step after t = {time}", stepper.peak),
                });
            }
            time = if s == sub {
                seg_end
            } else {
                seg_start + s as f64 * stepper.dt
            };
        }
        done += base;
        let values = stepper.to_physical(&v);
        peak = values.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        record(&mut traj, time, values);
        progress(time, cfg.t_end);
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub u0: GridFunction,
    pub t_start: f64,
    pub state0: ModulationState,
}

/// Parameters `(λ_n, b_n, x_n, T_n)` of the bootstrap data.
pub fn bootstrap_parameters(n: usize, beta3: f64) -> Result<(f64, f64, f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidInput("n must be positive".into()));
    }
    let nf = n as f64;
    let inside = nf - 0.5 * beta3 * libm::log(nf / 2.0);
    if !(inside > 0.0) {
        return Err(Error::InvalidInput(format!(
            "n = {n} too small: n - (β₃/2)log(n/2) = {inside}"
        )));
    }
    let lambda = 1.0 / libm::sqrt(inside);
    let l2 = lambda * lambda;
    let b = -l2 + 0.5 * beta3 * l2 * l2;
    Ok((lambda, b, -libm::sqrt(nf), 1.0 / libm::sqrt(nf)))
}

/// `u0 = λ_n^{-1/2}Q_{b_n}((x - x_n)/λ_n)` at `t = T_n` with `ε ≡ 0`.
pub fn minimal_mass_initial_data(n: usize, ps: &ProfileSet, gamma: f64, grid: &Grid) -> Result<InitialData> {
    if ps.order < 3 {
        return Err(Error::InvalidInput(
            "bootstrap data needs profiles up to order 3".into(),
        ));
    }
    let (lambda, b, x, t) = bootstrap_parameters(n, ps.beta(3))?;
    if b.abs() > 0.2 {
        return Err(Error::InvalidInput(format!("n = {n} gives |b| = {} > 0.2", b.abs())));
    }
    let left_reach = 40.0f64.max(2.0 * libm::pow(b.abs(), -gamma));
    if !grid.contains(x - lambda * left_reach, x + 40.0 * lambda) {
        return Err(Error::Domain(format!(
            "grid [{}, {}] does not contain [{}, {}]",
            grid.left(),
            grid.right(),
            x - lambda * left_reach,
            x + 40.0 * lambda
        )));
    }
    let state0 = ModulationState::exact(lambda, x, b, gamma, t, &default_reference_grid());
    let u0 = reconstruct(&state0, ps, grid)?;
    Ok(InitialData { u0, t_start: t, state0 })
}
