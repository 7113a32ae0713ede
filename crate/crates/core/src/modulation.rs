//! Modulation: `u(x) = λ^{-1/2}(Q_b + ε)((x - x̄)/λ)` with
//! `(ε, yΛQ) = (ε, ΛQ) = (ε, Q) = 0`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{
    differentiate, inner_samples, integrate_samples, interpolate_samples, upsample_periodic, Grid, GridFunction,
};
use crate::linalg::{determinant, solve_dense, DenseMatrix};
use crate::profiles::{profile_pieces, smooth_step, theta, ProfileSet};
use crate::soliton;

pub const DEFAULT_DELTA0: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModulationState {
    pub lambda: f64,
    pub x_center: f64,
    pub b: f64,
    /// Cut-off exponent of the profile `Q_b` used for `ε`.
    pub gamma: f64,
    pub epsilon: GridFunction,
    pub time_label: f64,
    /// Newton iterations spent (0 for states built directly).
    #[cfg_attr(feature = "serde", serde(default))]
    pub iterations: usize,
}

impl ModulationState {
    /// State with `ε = 0` on `grid`.
    pub fn exact(lambda: f64, x_center: f64, b: f64, gamma: f64, time_label: f64, grid: &Grid) -> Self {
        ModulationState {
            lambda,
            x_center,
            b,
            gamma,
            epsilon: grid.zeros(),
            time_label,
            iterations: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModulationResiduals {
    pub time: f64,
    /// `|λ_s/λ + b|`.
    pub scale_eq: f64,
    /// `|x_s/λ - 1|`.
    pub translation_eq: f64,
    /// `|b_s + θ(b)|`.
    pub b_eq: f64,
}

/// Rescaled-time derivatives along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RescaledRates {
    pub time: f64,
    /// `s = ∫dt/λ³` measured from the first state.
    pub s: f64,
    pub lambda_s_over_lambda: f64,
    pub x_s_over_lambda: f64,
    pub b_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MinimalMassIdentities {
    /// `∫ε² + 2b(P, Q)`.
    pub mass_gap: f64,
    /// `∫ε_y² - 2λ²E₀ - 2b(P, Q)`.
    pub energy_gap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeOptions {
    /// Cut-off exponent; `None` uses the profile set default.
    pub gamma: Option<f64>,
    /// Grid on which the Newton iteration evaluates the pairings.
    pub newton_grid: Grid,
    /// Grid on which `ε` is returned.
    pub reference_grid: Grid,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub delta0: f64,
    /// Spectral refinement factor applied to periodic snapshots before interpolation.
    pub upsample: usize,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions {
            gamma: None,
            newton_grid: Grid::line_with_spacing(-40.0, 40.0, 1.0 / 32.0).expect("newton grid"),
            reference_grid: default_reference_grid(),
            tolerance: 1e-10,
            max_iterations: 50,
            delta0: DEFAULT_DELTA0,
            upsample: 8,
        }
    }
}

/// `[-250, 40]` at spacing `1/16`.
pub fn default_reference_grid() -> Grid {
    Grid::line_with_spacing(-250.0, 40.0, 1.0 / 16.0).expect("reference grid")
}

/// A snapshot prepared for repeated evaluation of `λ^{1/2}u(λy + x̄)`.
pub struct Snapshot {
    grid: Grid,
    values: Vec<f64>,
}

impl Snapshot {
    pub fn new(u: &GridFunction, upsample: usize) -> Result<Self> {
        let refined = if u.grid().is_periodic() && upsample > 1 {
            upsample_periodic(u, upsample)?
        } else {
            u.clone()
        };
        Ok(Snapshot {
            grid: *refined.grid(),
            values: refined.into_values(),
        })
    }

    /// `u(x)`, zero outside the sampled window.
    pub fn eval(&self, x: f64) -> f64 {
        let g = &self.grid;
        let last = if g.is_periodic() { g.right() } else { g.right() + 1e-12 };
        if x < g.left() - 1e-12 || x >= last {
            return 0.0;
        }
        interpolate_samples(g, &self.values, x)
    }

    /// `w(y) = λ^{1/2} u(λy + x̄)` on `grid`.
    pub fn rescaled(&self, lambda: f64, x_center: f64, grid: &Grid) -> Vec<f64> {
        let s = libm::sqrt(lambda);
        (0..grid.len())
            .map(|i| s * self.eval(lambda * grid.point(i) + x_center))
            .collect()
    }
}

struct Directions {
    y_lambda_q: Vec<f64>,
    lambda_q: Vec<f64>,
    q: Vec<f64>,
}

impl Directions {
    fn on(grid: &Grid) -> Self {
        Directions {
            y_lambda_q: (0..grid.len())
                .map(|i| grid.point(i) * soliton::lambda_q(grid.point(i)))
                .collect(),
            lambda_q: (0..grid.len()).map(|i| soliton::lambda_q(grid.point(i))).collect(),
            q: (0..grid.len()).map(|i| soliton::q(grid.point(i))).collect(),
        }
    }

    fn pair(&self, grid: &Grid, f: &[f64]) -> [f64; 3] {
        [
            inner_samples(grid, f, &self.y_lambda_q),
            inner_samples(grid, f, &self.lambda_q),
            inner_samples(grid, f, &self.q),
        ]
    }
}

/// `ε`, the pairings and the Jacobian of the pairings in `(λ, x̄, b)`.
fn evaluate(
    snap: &Snapshot,
    ps: &ProfileSet,
    params: [f64; 3],
    gamma: f64,
    grid: &Grid,
    dirs: &Directions,
) -> Result<(Vec<f64>, [f64; 3], DenseMatrix)> {
    let [lambda, xc, b] = params;
    let w = snap.rescaled(lambda, xc, grid);
    let pieces = profile_pieces(ps, b, gamma, grid);
    let eps: Vec<f64> = (0..grid.len())
        .map(|i| w[i] - soliton::q(grid.point(i)) - pieces.d[i])
        .collect();
    let wf = GridFunction::new(*grid, w.clone())?;
    let wy = differentiate(&wf, 1)?;
    // ∂ε/∂λ = Λw/λ, ∂ε/∂x̄ = w'/λ, ∂ε/∂b = -∂Q_b/∂b
    let d_lambda: Vec<f64> = (0..grid.len())
        .map(|i| (0.5 * w[i] + grid.point(i) * wy.values()[i]) / lambda)
        .collect();
    let d_x: Vec<f64> = wy.values().iter().map(|v| v / lambda).collect();
    let d_b: Vec<f64> = pieces.db.iter().map(|v| -v).collect();
    let cols = [dirs.pair(grid, &d_lambda), dirs.pair(grid, &d_x), dirs.pair(grid, &d_b)];
    let jac = DenseMatrix::from_fn(3, 3, |i, j| cols[j][i]);
    let pairings = dirs.pair(grid, &eps);
    Ok((eps, pairings, jac))
}

fn h1_norm(grid: &Grid, f: &[f64]) -> Result<f64> {
    let gf = GridFunction::new(*grid, f.to_vec())?;
    let d = differentiate(&gf, 1)?;
    Ok(libm::sqrt(
        inner_samples(grid, f, f) + inner_samples(grid, d.values(), d.values()),
    ))
}

/// Newton iteration for the three orthogonality conditions, starting from `guess`.
pub fn decompose(u: &GridFunction, ps: &ProfileSet, guess: &ModulationState) -> Result<ModulationState> {
    decompose_with(u, ps, guess, &DecomposeOptions::default())
}

pub fn decompose_with(
    u: &GridFunction,
    ps: &ProfileSet,
    guess: &ModulationState,
    opts: &DecomposeOptions,
) -> Result<ModulationState> {
    let snap = Snapshot::new(u, opts.upsample)?;
    decompose_snapshot(&snap, ps, guess, opts)
}

pub fn decompose_snapshot(
    snap: &Snapshot,
    ps: &ProfileSet,
    guess: &ModulationState,
    opts: &DecomposeOptions,
) -> Result<ModulationState> {
    let gamma = opts.gamma.unwrap_or(guess.gamma);
    let grid = &opts.newton_grid;
    let dirs = Directions::on(grid);
    let mut p = [guess.lambda, guess.x_center, guess.b];
    if !(p[0] > 0.0) {
        return Err(Error::InvalidInput(format!("guess has lambda = {}", p[0])));
    }
    let mut iterations = 0;
    loop {
        let (eps, pairings, jac) = evaluate(snap, ps, p, gamma, grid, &dirs)?;
        let scale = libm::sqrt(inner_samples(grid, &eps, &eps)).max(1.0);
        if pairings.iter().all(|v| v.abs() < opts.tolerance * scale) {
            break;
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence { iterations, pairings });
        }
        let step = solve_dense(&jac, &pairings)?;
        let mut t = 1.0;
        // keep λ positive and |b| within the profile range
        while (p[0] - t * step[0] <= 0.0 || (p[2] - t * step[2]).abs() > 0.2) && t > 1e-6 {
            t *= 0.5;
        }
        for k in 0..3 {
            p[k] -= t * step[k];
        }
        iterations += 1;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonConvergence { iterations, pairings });
        }
    }
    let reference = &opts.reference_grid;
    let w = snap.rescaled(p[0], p[1], reference);
    let pieces = profile_pieces(ps, p[2], gamma, reference);
    let eps: Vec<f64> = (0..reference.len())
        .map(|i| w[i] - soliton::q(reference.point(i)) - pieces.d[i])
        .collect();
    let norm = h1_norm(reference, &eps)?;
    if norm > opts.delta0 {
        return Err(Error::OutOfWindow {
            norm,
            limit: opts.delta0,
        });
    }
    Ok(ModulationState {
        lambda: p[0],
        x_center: p[1],
        b: p[2],
        gamma,
        epsilon: GridFunction::new(*reference, eps)?,
        time_label: guess.time_label,
        iterations,
    })
}

/// Parameters at time `t` obtained by integrating the leading-order modulation system
/// `λ_t = -b/λ²`, `x_t = 1/λ²`, `b_t = -θ(b)/λ³` from `state` (RK4, `substeps` steps).
pub fn predict(state: &ModulationState, ps: &ProfileSet, t: f64, substeps: usize) -> ModulationState {
    let rhs = |p: [f64; 3]| {
        let [l, _, b] = p;
        let l2 = l * l;
        [-b / l2, 1.0 / l2, -theta(ps, b) / (l2 * l)]
    };
    let n = substeps.max(1);
    let h = (t - state.time_label) / n as f64;
    let mut p = [state.lambda, state.x_center, state.b];
    let add = |p: [f64; 3], k: [f64; 3], a: f64| [p[0] + a * k[0], p[1] + a * k[1], p[2] + a * k[2]];
    for _ in 0..n {
        let k1 = rhs(p);
        let k2 = rhs(add(p, k1, 0.5 * h));
        let k3 = rhs(add(p, k2, 0.5 * h));
        let k4 = rhs(add(p, k3, h));
        for i in 0..3 {
            p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    ModulationState {
        lambda: p[0],
        x_center: p[1],
        b: p[2],
        gamma: state.gamma,
        epsilon: state.epsilon.clone(),
        time_label: t,
        iterations: 0,
    }
}

/// Decomposes a time-ordered sequence of snapshots, each guess predicted from the
/// previous state. The first guess is `start` propagated to the first time.
pub fn track<'a>(
    snapshots: impl IntoIterator<Item = (f64, &'a GridFunction)>,
    ps: &ProfileSet,
    start: &ModulationState,
    opts: &DecomposeOptions,
) -> Result<Tracking> {
    // The window is reported per state rather than enforced: along a minimal-mass
    // trajectory ∫ε² ≈ -2b(P,Q) grows with |b| and crosses any fixed δ₀ eventually.
    let relaxed = DecomposeOptions {
        delta0: f64::INFINITY,
        ..opts.clone()
    };
    let mut out = Tracking {
        states: Vec::new(),
        epsilon_norms: Vec::new(),
        delta0: opts.delta0,
        stopped: None,
    };
    for (t, u) in snapshots {
        let prev = out.states.last().unwrap_or(start);
        let mut guess = predict(prev, ps, t, 64);
        guess.time_label = t;
        match decompose_with(u, ps, &guess, &relaxed) {
            Ok(mut st) => {
                st.time_label = t;
                out.epsilon_norms.push(epsilon_h1_norm(&st)?);
                out.states.push(st);
            }
            Err(e @ (Error::NonConvergence { .. } | Error::InvalidInput(_))) if !out.states.is_empty() => {
                out.stopped = Some(TrackStop {
                    time: t,
                    reason: format!("{e}"),
                });
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Result of [`track`]: the converged prefix of the snapshot sequence.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tracking {
    pub states: Vec<ModulationState>,
    /// `‖ε‖_{H¹}` of each state on its reference grid.
    pub epsilon_norms: Vec<f64>,
    pub delta0: f64,
    /// First snapshot where Newton failed; tracking ends there.
    pub stopped: Option<TrackStop>,
}

impl Tracking {
    /// Number of leading states with `‖ε‖_{H¹} ≤ δ₀`.
    pub fn in_window(&self) -> usize {
        self.epsilon_norms.iter().take_while(|&&n| n <= self.delta0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrackStop {
    pub time: f64,
    pub reason: String,
}

pub fn epsilon_h1_norm(state: &ModulationState) -> Result<f64> {
    h1_norm(state.epsilon.grid(), state.epsilon.values())
}

/// Jacobian of `((ε, yΛQ), (ε, ΛQ), (ε, Q))` in `(λ, x̄, b)` at the given parameters.
pub fn pairing_jacobian(
    u: &GridFunction,
    ps: &ProfileSet,
    state: &ModulationState,
    opts: &DecomposeOptions,
) -> Result<[[f64; 3]; 3]> {
    let snap = Snapshot::new(u, opts.upsample)?;
    let dirs = Directions::on(&opts.newton_grid);
    let (_, _, jac) = evaluate(
        &snap,
        ps,
        [state.lambda, state.x_center, state.b],
        state.gamma,
        &opts.newton_grid,
        &dirs,
    )?;
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = jac[(i, j)];
        }
    }
    Ok(out)
}

pub fn jacobian_determinant(j: &[[f64; 3]; 3]) -> f64 {
    determinant(&DenseMatrix::from_fn(3, 3, |a, b| j[a][b]))
}

/// Pairings `((ε, yΛQ), (ε, ΛQ), (ε, Q))` of a state on its own grid.
pub fn orthogonality_pairings(state: &ModulationState) -> [f64; 3] {
    let grid = state.epsilon.grid();
    Directions::on(grid).pair(grid, state.epsilon.values())
}

/// `λ^{-1/2}(Q_b + ε)((x - x̄)/λ)` sampled on `grid`; `ε` is zero outside its own grid.
pub fn reconstruct(state: &ModulationState, ps: &ProfileSet, grid: &Grid) -> Result<GridFunction> {
    let ys = Grid::line(
        (grid.left() - state.x_center) / state.lambda,
        (grid.left() + (grid.len() - 1) as f64 * grid.spacing() - state.x_center) / state.lambda,
        grid.len(),
    )?;
    let pieces = profile_pieces(ps, state.b, state.gamma, &ys);
    let s = 1.0 / libm::sqrt(state.lambda);
    let values = (0..grid.len())
        .map(|i| {
            let y = ys.point(i);
            let e = state.epsilon.interpolate(y);
            s * (soliton::q(y) + pieces.d[i] + e)
        })
        .collect();
    GridFunction::new(*grid, values)
}

// Three-point derivative on a nonuniform mesh at index i (one-sided at the ends).
fn nonuniform_derivative(s: &[f64], f: &[f64], i: usize) -> f64 {
    let n = s.len();
    let (a, b, c) = if i == 0 {
        (0, 1, 2)
    } else if i == n - 1 {
        (n - 3, n - 2, n - 1)
    } else {
        (i - 1, i, i + 1)
    };
    let x = s[i];
    let (sa, sb, sc) = (s[a], s[b], s[c]);
    f[a] * ((x - sb) + (x - sc)) / ((sa - sb) * (sa - sc))
        + f[b] * ((x - sa) + (x - sc)) / ((sb - sa) * (sb - sc))
        + f[c] * ((x - sa) + (x - sb)) / ((sc - sa) * (sc - sb))
}

/// Rescaled time `s` (trapezoid in `t` of `λ^{-3}`) and the derivatives
/// `λ_s/λ`, `x_s/λ`, `b_s` by three-point differences in `s`.
pub fn rescaled_rates(states: &[ModulationState]) -> Result<Vec<RescaledRates>> {
    if states.len() < 3 {
        return Err(Error::Insufficient(format!("{} states, need at least 3", states.len())));
    }
    if states.windows(2).any(|w| !(w[1].time_label > w[0].time_label)) {
        return Err(Error::InvalidInput("time labels must increase strictly".into()));
    }
    let n = states.len();
    let mut s = vec![0.0; n];
    for i in 1..n {
        let dt = states[i].time_label - states[i - 1].time_label;
        let f0 = libm::pow(states[i - 1].lambda, -3.0);
        let f1 = libm::pow(states[i].lambda, -3.0);
        s[i] = s[i - 1] + 0.5 * dt * (f0 + f1);
    }
    let log_lambda: Vec<f64> = states.iter().map(|st| libm::log(st.lambda)).collect();
    let xs: Vec<f64> = states.iter().map(|st| st.x_center).collect();
    let bs: Vec<f64> = states.iter().map(|st| st.b).collect();
    Ok((0..n)
        .map(|i| RescaledRates {
            time: states[i].time_label,
            s: s[i],
            lambda_s_over_lambda: nonuniform_derivative(&s, &log_lambda, i),
            x_s_over_lambda: nonuniform_derivative(&s, &xs, i) / states[i].lambda,
            b_s: nonuniform_derivative(&s, &bs, i),
        })
        .collect())
}

pub fn modulation_residuals(states: &[ModulationState], ps: &ProfileSet) -> Result<Vec<ModulationResiduals>> {
    let rates = rescaled_rates(states)?;
    Ok(rates
        .iter()
        .zip(states)
        .map(|(r, st)| ModulationResiduals {
            time: r.time,
            scale_eq: (r.lambda_s_over_lambda + st.b).abs(),
            translation_eq: (r.x_s_over_lambda - 1.0).abs(),
            b_eq: (r.b_s + theta(ps, st.b)).abs(),
        })
        .collect())
}

pub fn minimal_mass_identities(state: &ModulationState, ps: &ProfileSet, e0: f64) -> MinimalMassIdentities {
    let eps = &state.epsilon;
    let grid = eps.grid();
    let l2 = inner_samples(grid, eps.values(), eps.values());
    let d = differentiate(eps, 1).expect("first derivative");
    let grad = inner_samples(grid, d.values(), d.values());
    let pq = 2.0 * state.b * ps.pq_pairing();
    MinimalMassIdentities {
        mass_gap: l2 + pq,
        energy_gap: grad - 2.0 * state.lambda * state.lambda * e0 - pq,
    }
}

/// `ψ`: `e^y` for `y ≤ -1`, 1 for `y ≥ -1/2`, and `e^y(1 - s) + s` in between with `s` the
/// smooth step on `[-1, -1/2]`.
pub fn psi(y: f64) -> f64 {
    if y <= -1.0 {
        libm::exp(y)
    } else if y >= -0.5 {
        1.0
    } else {
        let s = smooth_step(2.0 * (y + 1.0));
        libm::exp(y) * (1.0 - s) + s
    }
}

/// The quadratic part of `F₀` and the full value.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct F0Value {
    pub value: f64,
    /// `λ⁻²[∫ε_y²ψ_B + ∫ε²e^{y/B}]`.
    pub weighted_norm: f64,
}

/// `F₀ = λ⁻²[∫ε_y²ψ_B + ∫ε²e^{y/B} - (1/3)∫((Q_b + ε)⁶ - Q_b⁶ - 6Q_b⁵ε)ψ_B]`.
pub fn f0_diagnostic(state: &ModulationState, ps: &ProfileSet, b_weight: f64) -> Result<F0Value> {
    if !(b_weight >= 100.0) {
        return Err(Error::InvalidInput(format!("B = {b_weight} must be at least 100")));
    }
    let eps = &state.epsilon;
    let grid = eps.grid();
    let pieces = profile_pieces(ps, state.b, state.gamma, grid);
    let d = differentiate(eps, 1)?;
    let mut grad = vec![0.0; grid.len()];
    let mut l2 = vec![0.0; grid.len()];
    let mut nl = vec![0.0; grid.len()];
    for i in 0..grid.len() {
        let y = grid.point(i);
        let w = psi(y / b_weight);
        let e = eps.values()[i];
        let qb = soliton::q(y) + pieces.d[i];
        let q2 = qb * qb;
        grad[i] = d.values()[i] * d.values()[i] * w;
        l2[i] = e * e * libm::exp(y / b_weight);
        nl[i] = e * e * (15.0 * q2 * q2 + e * (20.0 * q2 * qb + e * (15.0 * q2 + e * (6.0 * qb + e)))) * w;
    }
    let inv = 1.0 / (state.lambda * state.lambda);
    let quad = integrate_samples(grid, &grad) + integrate_samples(grid, &l2);
    Ok(F0Value {
        value: inv * (quad - integrate_samples(grid, &nl) / 3.0),
        weighted_norm: inv * quad,
    })
}
