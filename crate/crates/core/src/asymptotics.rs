//! Post-processing of a decomposed trajectory: parameter expansions, time-profile
//! residuals, the left tail law and the integral identities.
//!
//! A minimal-mass solution with scaling rate `ℓ₀` and offset `x₀` is the rescaling
//! `u(t, x) = μ^{1/2} S(μ³t, μ(x - x₀))`, `μ = ℓ₀^{1/2}`, of the normalized solution `S`
//! for which `λ ≈ t`, `x ≈ -1/t - c₀t` and `b ≈ -t²`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::evolver::Trajectory;
use crate::fit::{fit_basis_weighted, median, polyfit, LinearFit};
use crate::grid::{differentiate, integrate_samples, Grid, GridFunction};
use crate::modulation::{rescaled_rates, ModulationState};
use crate::profiles::ProfileSet;
use crate::soliton::{self, SolitonConstants};

/// Expansion coefficients of `λ(t)`, `b(t)`, `x(t)` in the shifted time `τ = t - t*`.
///
/// A finite-`n` trajectory is a time translate of the normalized one: the bootstrap data
/// sit at `T_n` while `λ(T_n) = T_n - O(n^{-1} log n)`, so every expansion is taken in `τ`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ParameterFit {
    /// Kinematic `ℓ₀`: the `λ → 0` limit of `λ_t`, fitted as a polynomial in `λ²`.
    pub ell0: f64,
    pub lambda_t_fit: LinearFit,
    /// Time shift of the blow-up.
    pub t_star: f64,
    /// `λ - ℓ₀τ ≈ λ̃₀τ³`.
    pub lambda_fit: LinearFit,
    /// `ℓ₀` recovered from `b ≈ -ℓ₀³τ² + b̃₀τ⁴`.
    pub ell0_from_b: f64,
    pub b_fit: LinearFit,
    /// `x + ℓ₀⁻²/τ ≈ x₀ + c̃₀τ`.
    pub x0: f64,
    pub c_tilde0: f64,
    pub x_fit: LinearFit,
    /// `c₀ = -c̃₀/ℓ₀` in the normalized frame.
    pub c0: f64,
    /// `-3c₀`.
    pub beta3_dynamic: f64,
    /// `λ₀ = λ̃₀/ℓ₀⁴` in the normalized frame.
    pub lambda0: f64,
    /// Intercept of `b/λ²` fitted as a polynomial in `λ²`.
    pub b_over_lambda2_limit: f64,
    /// `b_s/b² ≈ -κ - κ₁b`.
    pub bs_kappa: f64,
    pub bs_linear: f64,
    /// Times of the states used.
    pub t_range: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Only states with `t ≤ window_ratio·t_min` enter the fits.
    pub window_ratio: f64,
    /// Minimal `t_max/t_min` of the selected states.
    pub min_ratio: f64,
    /// Degree in `λ²` of the `λ_t` and `b/λ²` series.
    pub series_degree: usize,
    /// Fit the blow-up time shift `t*`; with `false`, `t* = 0`.
    pub time_shift: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            window_ratio: 3.05,
            min_ratio: 2.9,
            series_degree: 3,
            time_shift: true,
        }
    }
}

fn states_of(traj: &Trajectory) -> Result<&[ModulationState]> {
    traj.modulation
        .as_deref()
        .ok_or_else(|| Error::Insufficient("trajectory has no modulation states".into()))
}

pub fn fit_parameters(traj: &Trajectory) -> Result<ParameterFit> {
    fit_states(states_of(traj)?, &FitOptions::default())
}

/// Second-order derivative of samples at nonuniform abscissae.
fn nonuniform_derivative(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let three = |i: usize, at: usize| -> f64 {
        // derivative at t[at] of the parabola through i-1, i, i+1
        let (x0, x1, x2) = (t[i - 1], t[i], t[i + 1]);
        let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
        let x = t[at];
        y0 * (2.0 * x - x1 - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (2.0 * x - x0 - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (2.0 * x - x0 - x1) / ((x2 - x0) * (x2 - x1))
    };
    (0..n).map(|i| three(i.clamp(1, n - 2), i)).collect()
}

/// Golden-section minimum of `f` on `[a, b]`.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = 0.5 * (libm::sqrt(5.0) - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

pub fn fit_states(states: &[ModulationState], opts: &FitOptions) -> Result<ParameterFit> {
    let t_first = states.iter().map(|s| s.time_label).fold(f64::INFINITY, f64::min);
    let mut states: Vec<&ModulationState> = states
        .iter()
        // slack so that a sample on the window edge survives rescaling of the time axis
        .filter(|s| s.time_label <= opts.window_ratio * t_first * (1.0 + 1e-9))
        .collect();
    states.sort_by(|a, b| a.time_label.total_cmp(&b.time_label));
    let n = states.len();
    let needed = opts.series_degree + 3;
    if n < needed {
        return Err(Error::Insufficient(format!("{n} states, need at least {needed}")));
    }
    let t: Vec<f64> = states.iter().map(|s| s.time_label).collect();
    let (tmin, tmax) = (t[0], t[n - 1]);
    if !(tmin > 0.0) || tmax < opts.min_ratio * tmin {
        return Err(Error::Insufficient(format!(
            "t-range [{tmin}, {tmax}] spans less than a factor {}",
            opts.min_ratio
        )));
    }
    let lambda: Vec<f64> = states.iter().map(|s| s.lambda).collect();
    let b: Vec<f64> = states.iter().map(|s| s.b).collect();
    let x: Vec<f64> = states.iter().map(|s| s.x_center).collect();
    let l2: Vec<f64> = lambda.iter().map(|l| l * l).collect();

    let lambda_t = nonuniform_derivative(&t, &lambda);
    let lambda_t_fit = polyfit(&l2, &lambda_t, opts.series_degree)?;
    let ell0 = lambda_t_fit.coefficients[0];
    if !(ell0 > 0.0) {
        return Err(Error::InvalidInput(format!("kinematic ℓ₀ = {ell0} is not positive")));
    }

    // relative misfits: a centre error δx costs δx/λ in the self-similar variable
    let weights: Vec<f64> = t.iter().map(|v| tmin / v).collect();
    let fit_in = |shift: f64, y: &[f64], basis: &[&dyn Fn(f64) -> f64]| -> Result<LinearFit> {
        let tau: Vec<f64> = t.iter().map(|v| v - shift).collect();
        fit_basis_weighted(&tau, y, &weights, basis)
    };
    let cube = |s: f64| s * s * s;
    let lambda_rem = |shift: f64| -> Vec<f64> { t.iter().zip(&lambda).map(|(v, l)| l - ell0 * (v - shift)).collect() };
    let t_star = if opts.time_shift {
        let cost = |shift: f64| fit_in(shift, &lambda_rem(shift), &[&cube]).map_or(f64::INFINITY, |f| f.rms_residual);
        golden_min(cost, -0.5 * tmin, 0.5 * tmin, 1e-12 * tmin)
    } else {
        0.0
    };
    let lambda_fit = fit_in(t_star, &lambda_rem(t_star), &[&cube])?;
    let b_fit = fit_in(t_star, &b, &[&|s: f64| s * s, &|s: f64| libm::pow(s, 4.0)])?;
    let ell0_from_b = libm::cbrt(-b_fit.coefficients[0]);
    let x_rem: Vec<f64> = t
        .iter()
        .zip(&x)
        .map(|(v, x)| x + 1.0 / (ell0 * ell0 * (v - t_star)))
        .collect();
    let x_fit = fit_in(t_star, &x_rem, &[&|_| 1.0, &|s: f64| s])?;
    let c_tilde0 = x_fit.coefficients[1];
    let c0 = -c_tilde0 / ell0;

    let ratio: Vec<f64> = b.iter().zip(&l2).map(|(b, l2)| b / l2).collect();
    let ratio_fit = polyfit(&l2, &ratio, opts.series_degree)?;

    let owned: Vec<ModulationState> = states.iter().map(|s| (*s).clone()).collect();
    let rates = rescaled_rates(&owned)?;
    let bs_over_b2: Vec<f64> = rates.iter().zip(&b).map(|(r, b)| r.b_s / (b * b)).collect();
    let bs_fit = polyfit(&b, &bs_over_b2, 1)?;

    Ok(ParameterFit {
        ell0,
        lambda_t_fit,
        t_star,
        lambda0: lambda_fit.coefficients[0] / libm::pow(ell0, 4.0),
        lambda_fit,
        ell0_from_b,
        b_fit,
        x0: x_fit.coefficients[0],
        c_tilde0,
        x_fit,
        c0,
        beta3_dynamic: -3.0 * c0,
        b_over_lambda2_limit: ratio_fit.coefficients[0],
        bs_kappa: -bs_fit.coefficients[0],
        bs_linear: -bs_fit.coefficients[1],
        t_range: (tmin, tmax),
    })
}

/// `ℓ₀ = 16E/‖Q‖²_{L¹}`.
pub fn ell0_from_energy(energy: f64, consts: &SolitonConstants) -> f64 {
    16.0 * energy / (consts.l1_norm * consts.l1_norm)
}

/// Normalization used by the time-profile residual.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Frame {
    pub ell0: f64,
    pub x0: f64,
    pub c0: f64,
    pub t_star: f64,
}

impl From<&ParameterFit> for Frame {
    fn from(f: &ParameterFit) -> Self {
        Frame {
            ell0: f.ell0,
            x0: f.x0,
            c0: f.c0,
            t_star: f.t_star,
        }
    }
}

/// `Q₁ = -P₁' - λ₀(ΛQ)' + c₁Q''` with `λ₀ = -β₃/6` and `c₁ = β₃²/36 + β₄/30`.
pub fn q1_profile(ps: &ProfileSet, grid: &Grid) -> Result<GridFunction> {
    if ps.order < 4 {
        return Err(Error::InvalidInput("Q₁ needs profiles up to order 4".into()));
    }
    let beta3 = ps.beta(3);
    let lambda0 = -beta3 / 6.0;
    let c1 = beta3 * beta3 / 36.0 + ps.beta(4) / 30.0;
    let p1 = GridFunction::new(*grid, ps.sample(1, grid))?;
    let dp1 = differentiate(&p1, 1)?;
    let values = (0..grid.len())
        .map(|i| {
            let y = grid.point(i);
            -dp1.values()[i] - lambda0 * soliton::lambda_q_prime(y) + c1 * soliton::q_second(y)
        })
        .collect();
    GridFunction::new(*grid, values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ResidualSample {
    pub t: f64,
    pub m: usize,
    pub residual: f64,
}

/// `‖∂ₓᵐu(t) - Σ_k τ^{-(1/2+m-2k)}Q_k^{(m-k)}(ξ)‖_{L²}` for each snapshot, in the frame
/// `τ = ℓ₀^{3/2}(t - t*)`, `ξ = (μ(x - x₀) + 1/τ)/τ + c₀`. The `k = 1` term enters for `m = 2`.
pub fn time_profile_residual(
    traj: &Trajectory,
    ps: &ProfileSet,
    frame: &Frame,
    m: usize,
) -> Result<Vec<ResidualSample>> {
    if m > 2 {
        return Err(Error::UnsupportedOrder { order: m, max: 2 });
    }
    traj.snapshots
        .iter()
        .map(|s| {
            Ok(ResidualSample {
                t: s.time,
                m,
                residual: profile_residual_at(&s.u, s.time, ps, frame, m)?,
            })
        })
        .collect()
}

/// The predicted `∂ₓᵐu` at time `t` on `grid`.
pub fn profile_prediction(grid: &Grid, t: f64, ps: &ProfileSet, frame: &Frame, m: usize) -> Result<GridFunction> {
    if m > 2 {
        return Err(Error::UnsupportedOrder { order: m, max: 2 });
    }
    if !(t > frame.t_star) || !(frame.ell0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need t > t* and ℓ₀ > 0 (t = {t}, t* = {}, ℓ₀ = {})",
            frame.t_star, frame.ell0
        )));
    }
    let mu = libm::sqrt(frame.ell0);
    let tau = mu * mu * mu * (t - frame.t_star);
    let xi = |x: f64| (mu * (x - frame.x0) + 1.0 / tau) / tau + frame.c0;
    let amp = libm::sqrt(mu) * libm::pow(mu, m as f64);
    let lead = amp * libm::pow(tau, -(0.5 + m as f64));
    let q_m: fn(f64) -> f64 = match m {
        0 => soliton::q,
        1 => soliton::q_prime,
        _ => soliton::q_second,
    };
    let mut values: Vec<f64> = (0..grid.len()).map(|i| lead * q_m(xi(grid.point(i)))).collect();
    if m == 2 {
        // Q₁' on the uniform ξ-grid matching the sample points
        let n = grid.len();
        let xi_grid = Grid::line(xi(grid.point(0)), xi(grid.point(n - 1)), n)?;
        let q1 = q1_profile(ps, &xi_grid)?;
        let dq1 = differentiate(&q1, 1)?;
        let coef = amp * libm::pow(tau, -0.5);
        for (v, d) in values.iter_mut().zip(dq1.values()) {
            *v += coef * d;
        }
    }
    GridFunction::new(*grid, values)
}

fn profile_residual_at(u: &GridFunction, t: f64, ps: &ProfileSet, frame: &Frame, m: usize) -> Result<f64> {
    let du = differentiate(u, m)?;
    let pred = profile_prediction(u.grid(), t, ps, frame, m)?;
    let diff: Vec<f64> = du
        .values()
        .iter()
        .zip(pred.values())
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    Ok(libm::sqrt(integrate_samples(u.grid(), &diff)))
}

/// Ratio of the residual at the smallest time to the residual at the largest, and
/// whether the series decreases monotonically as `t` decreases.
pub fn residual_trend(series: &[ResidualSample]) -> Option<(f64, bool)> {
    let first = series.first()?;
    let last = series.last()?;
    let (small, large) = if first.t <= last.t {
        (first, last)
    } else {
        (last, first)
    };
    let mut sorted: Vec<&ResidualSample> = series.iter().collect();
    sorted.sort_by(|a, b| a.t.total_cmp(&b.t));
    let monotone = sorted.windows(2).all(|w| w[0].residual <= w[1].residual);
    Some((small.residual / large.residual, monotone))
}

/// Admissible lower end of the tail window, `1/t + 2/√t`.
pub fn tail_window_start(t: f64) -> f64 {
    1.0 / t + 2.0 / libm::sqrt(t)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailProfile {
    pub t: f64,
    /// `(R, R^{3/2}u(-R))` over the window.
    pub samples: Vec<(f64, f64)>,
    pub window: (f64, f64),
    /// Median over the middle 60% of the window.
    pub plateau: f64,
    /// `-½‖Q‖_{L¹}`.
    pub prediction: f64,
    pub strictly_negative: bool,
    /// `sup R^{5/2}|∂ₓu(-R)|` over the window.
    pub derivative_bound: f64,
}

pub fn tail_profile(u: &GridFunction, t: f64, consts: &SolitonConstants, x_max: f64) -> Result<TailProfile> {
    let r_min = tail_window_start(t);
    if !(x_max > r_min) {
        return Err(Error::Insufficient(format!("tail window [{r_min}, {x_max}] is empty")));
    }
    let grid = u.grid();
    if -x_max < grid.left() {
        return Err(Error::Domain(format!("x = {} lies outside the grid", -x_max)));
    }
    let du = differentiate(u, 1)?;
    let mut samples = Vec::new();
    let mut derivative_bound = 0.0f64;
    for i in 0..grid.len() {
        let r = -grid.point(i);
        if r >= r_min && r <= x_max {
            samples.push((r, libm::pow(r, 1.5) * u.values()[i]));
            derivative_bound = derivative_bound.max(libm::pow(r, 2.5) * du.values()[i].abs());
        }
    }
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = x_max - r_min;
    let core: Vec<f64> = samples
        .iter()
        .filter(|(r, _)| *r >= r_min + 0.2 * w && *r <= x_max - 0.2 * w)
        .map(|s| s.1)
        .collect();
    let plateau = median(&core).ok_or_else(|| Error::Insufficient("no samples in the tail window".into()))?;
    Ok(TailProfile {
        t,
        strictly_negative: samples.iter().all(|s| s.1 < 0.0),
        samples,
        window: (r_min, x_max),
        plateau,
        prediction: -consts.tail_coefficient,
        derivative_bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowedIntegral {
    pub x: f64,
    /// `∫_{-X}^{right end} u`.
    pub value: f64,
    /// `‖Q‖_{L¹}X^{-1/2}`.
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralChecks {
    pub t: f64,
    pub x_max: f64,
    /// `∫_{x ≥ -X_max}|u|`.
    pub l1_value: f64,
    /// `2‖Q‖_{L¹}√t - ‖Q‖_{L¹}X_max^{-1/2}`.
    pub l1_prediction: f64,
    pub windowed_integrals: Vec<WindowedIntegral>,
}

/// `∫_{x ≥ -a} f` by the trapezoid rule with linear interpolation at `-a`.
fn integral_from(grid: &Grid, f: &[f64], a: f64) -> f64 {
    let h = grid.spacing();
    let start = -a;
    let n = grid.len();
    let mut sum = 0.0;
    for i in 0..n - 1 {
        let (x0, x1) = (grid.point(i), grid.point(i + 1));
        if x1 <= start {
            continue;
        }
        if x0 >= start {
            sum += 0.5 * h * (f[i] + f[i + 1]);
        } else {
            let s = (x1 - start) / h;
            let fs = f[i + 1] + (f[i] - f[i + 1]) * s;
            sum += 0.5 * (x1 - start) * (fs + f[i + 1]);
        }
    }
    sum
}

pub fn integral_checks(
    u: &GridFunction,
    t: f64,
    consts: &SolitonConstants,
    x_max: f64,
    xs: &[f64],
) -> Result<IntegralChecks> {
    let grid = u.grid();
    if !(x_max > 0.0) || -x_max < grid.left() {
        return Err(Error::Domain(format!("window start {} outside the grid", -x_max)));
    }
    if xs.iter().any(|&x| !(x > 0.0) || -x < grid.left()) {
        return Err(Error::Domain("windowed integral start outside the grid".into()));
    }
    let abs: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    let l1 = consts.l1_norm;
    Ok(IntegralChecks {
        t,
        x_max,
        l1_value: integral_from(grid, &abs, x_max),
        l1_prediction: 2.0 * l1 * libm::sqrt(t) - l1 / libm::sqrt(x_max),
        windowed_integrals: xs
            .iter()
            .map(|&x| WindowedIntegral {
                x,
                value: integral_from(grid, u.values(), x),
                prediction: l1 / libm::sqrt(x),
            })
            .collect(),
    })
}

/// Options for [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisOptions {
    pub fit: FitOptions,
    /// Left end of the formed tail; `1/T_n` for the bootstrap data.
    pub x_max: f64,
    /// Time of the snapshot used for the tail and windowed integrals.
    pub tail_time: f64,
    /// Window starts for the signed integrals.
    pub windowed_xs: Vec<f64>,
    /// Times of the snapshots used for the L¹ law.
    pub l1_times: Vec<f64>,
    /// Orders of the time-profile residuals.
    pub residual_orders: Vec<usize>,
    /// Shift of `c₀` for the negative control.
    pub control_shift: f64,
}

impl AnalysisOptions {
    pub fn for_start_time(t_start: f64, t_end: f64) -> Self {
        let x_max = 1.0 / t_start;
        let tail_time = (0.75 * t_end).max(t_start);
        AnalysisOptions {
            fit: FitOptions::default(),
            x_max,
            tail_time,
            windowed_xs: vec![tail_window_start(tail_time).min(x_max), x_max],
            l1_times: vec![
                t_start + 0.5 * (t_end - t_start),
                t_start + 0.75 * (t_end - t_start),
                t_end,
            ],
            residual_orders: vec![0, 1],
            control_shift: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct L1Check {
    pub t: f64,
    pub measured: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AsymptoticsReport {
    pub ell0: f64,
    pub ell0_energy: f64,
    pub x0: f64,
    pub c0: f64,
    pub beta3_dynamic: f64,
    pub beta3_profile: f64,
    pub b_over_lambda2_limit: f64,
    pub bs_kappa: f64,
    pub tail_coefficient_fit: f64,
    pub tail_window: (f64, f64),
    pub tail: TailProfile,
    /// `C` in `∫_{x ≥ -X_max}|u| + ‖Q‖_{L¹}X_max^{-1/2} ≈ C√t`, to compare with `2‖Q‖_{L¹}`.
    pub l1_law_constant: f64,
    pub l1_checks: Vec<L1Check>,
    pub windowed_integral_checks: Vec<WindowedIntegral>,
    pub residual_series: Vec<ResidualSample>,
    /// Residuals with `c₀` shifted by the control offset.
    pub control_series: Vec<ResidualSample>,
    pub fit: ParameterFit,
}

fn nearest_snapshot(traj: &Trajectory, t: f64) -> Result<&crate::evolver::Snapshot> {
    traj.snapshots
        .iter()
        .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
        .ok_or_else(|| Error::Insufficient("trajectory has no snapshots".into()))
}

/// Runs every check on a decomposed trajectory.
pub fn analyze(
    traj: &Trajectory,
    ps: &ProfileSet,
    consts: &SolitonConstants,
    opts: &AnalysisOptions,
) -> Result<AsymptoticsReport> {
    let states = states_of(traj)?;
    let fit = fit_states(states, &opts.fit)?;
    let e0 = traj
        .conserved
        .first()
        .ok_or_else(|| Error::Insufficient("no conserved-quantity samples".into()))?
        .energy;
    let frame = Frame::from(&fit);
    let mut residual_series = Vec::new();
    let mut control_series = Vec::new();
    let shifted = Frame {
        c0: frame.c0 + opts.control_shift,
        ..frame
    };
    for &m in &opts.residual_orders {
        residual_series.extend(time_profile_residual(traj, ps, &frame, m)?);
        control_series.extend(time_profile_residual(traj, ps, &shifted, m)?);
    }
    let snap = nearest_snapshot(traj, opts.tail_time)?;
    let tail = tail_profile(&snap.u, snap.time, consts, opts.x_max)?;
    let integrals = integral_checks(&snap.u, snap.time, consts, opts.x_max, &opts.windowed_xs)?;
    let mut l1_checks = Vec::new();
    let (mut num, mut den) = (0.0, 0.0);
    for &t in &opts.l1_times {
        let s = nearest_snapshot(traj, t)?;
        let c = integral_checks(&s.u, s.time, consts, opts.x_max, &[])?;
        let total = c.l1_value + consts.l1_norm / libm::sqrt(opts.x_max);
        num += total * libm::sqrt(s.time);
        den += s.time;
        l1_checks.push(L1Check {
            t: s.time,
            measured: c.l1_value,
            predicted: c.l1_prediction,
        });
    }
    Ok(AsymptoticsReport {
        ell0: fit.ell0,
        ell0_energy: ell0_from_energy(e0, consts),
        x0: fit.x0,
        c0: fit.c0,
        beta3_dynamic: fit.beta3_dynamic,
        beta3_profile: ps.beta(3),
        b_over_lambda2_limit: fit.b_over_lambda2_limit,
        bs_kappa: fit.bs_kappa,
        tail_coefficient_fit: tail.plateau,
        tail_window: tail.window,
        tail,
        l1_law_constant: num / den,
        l1_checks,
        windowed_integral_checks: integrals.windowed_integrals,
        residual_series,
        control_series,
        fit,
    })
}
