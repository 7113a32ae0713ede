//! Refined blow-up profiles.
//!
//! Builds `P_1, ..., P_K` and `β_2, ..., β_K` such that `Q_b = Q + Σ b^k P_k` solves
//! `-θ(b)∂_bQ_b + bΛQ_b + (Q_b'' - Q_b + Q_b⁵)' ≈ 0` up to `O(b^{K+1})`, with
//! `θ(b) = Σ β_k b^k`. Level `k` solves `(LP_k)' = Ω_k' + ΛP_{k-1} - Θ_k` in the form
//!
//! ```text
//! P_k = P̃_k - G_k - Σ_{j ≤ k-2} d_{j,k} P_j,    G_k(y) = ∫_y^∞ (ΛP_{k-1} - Θ_k),
//! ```
//!
//! where `P̃_k` decays on both sides and the `d_{j,k}` cancel the polynomial growth of the
//! source on the left. Each `P_k` grows like a degree `k-1` polynomial as `y → -∞`; the
//! fitted coefficients `c_{j,k}` also serve to extend `P_k` beyond the left end of the grid.
//!
//! [`localized_profile`] cuts the growth off with `χ_b(y) = χ(|b|^γ y)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{polyfit, polyval};
use crate::grid::{
    cumulative_from_right, differentiate, inner, inner_samples, integrate_samples, interpolate_samples, Grid,
    GridFunction,
};
use crate::linalg::{least_squares, DenseMatrix};
use crate::linearized::{solve_l, LinearizedOperator};
use crate::soliton;

pub const MAX_ORDER: usize = 6;
pub const DEFAULT_GAMMA: f64 = 0.9;
/// Relative tolerance on `(S_k, Q')` before the constrained solve.
pub const SOLVABILITY_TOLERANCE: f64 = 1e-6;

/// Default profile grid: `[-120, 40]`, spacing `1/64`.
pub fn default_profile_grid() -> Grid {
    Grid::line_with_spacing(-120.0, 40.0, 1.0 / 64.0).expect("default profile grid")
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProfileSet {
    /// Expansion order `K`.
    pub order: usize,
    pub grid: Grid,
    /// `P_1, ..., P_K`.
    pub profiles: Vec<GridFunction>,
    /// `β_2, ..., β_K` (`betas[0]` is `β_2`).
    pub betas: Vec<f64>,
    /// `left_coeffs[k-1][j-1] = c_{j,k}`: `P_k(y) ≈ Σ_j c_{j,k} y^{k-j}` as `y → -∞`.
    pub left_coeffs: Vec<Vec<f64>>,
    /// `d_coeffs[k-1][j-1] = d_{j,k}` for `j ≤ k-2`.
    pub d_coeffs: Vec<Vec<f64>>,
    /// Relative left-window residual of each polynomial fit.
    pub left_fit_residuals: Vec<f64>,
    /// `|(S_k, Q')|/(‖S_k‖‖Q'‖)` before projection.
    pub solvability: Vec<f64>,
    /// `(P_k, Q')` after gauge fixing.
    pub q_prime_pairings: Vec<f64>,
    /// `(P_k, Q)`.
    pub q_pairings: Vec<f64>,
    pub gamma_default: f64,
}

impl ProfileSet {
    /// `β_k` for `2 ≤ k ≤ K`, zero otherwise.
    pub fn beta(&self, k: usize) -> f64 {
        if k >= 2 && k <= self.order {
            self.betas[k - 2]
        } else {
            0.0
        }
    }

    /// `(P_1, Q)`.
    pub fn pq_pairing(&self) -> f64 {
        self.q_pairings[0]
    }

    /// `c_{j,k}`.
    pub fn c(&self, j: usize, k: usize) -> f64 {
        self.left_coeffs[k - 1][j - 1]
    }

    /// `d_{j,k}` for `1 ≤ j ≤ k-2`.
    pub fn d(&self, j: usize, k: usize) -> f64 {
        self.d_coeffs[k - 1][j - 1]
    }

    /// `P_k(y)` anywhere on the line: interpolated on the grid, continued by its left
    /// polynomial below the grid and by zero beyond the right end.
    pub fn eval(&self, k: usize, y: f64) -> f64 {
        let g = &self.grid;
        if y < g.left() {
            let c = &self.left_coeffs[k - 1];
            // c_{j,k} multiplies y^{k-j}: reverse into ascending powers
            let asc: Vec<f64> = c.iter().rev().copied().collect();
            polyval(&asc, y)
        } else if y > g.right() {
            0.0
        } else {
            interpolate_samples(g, self.profiles[k - 1].values(), y)
        }
    }

    /// `P_k` sampled on `grid`; exact copies when `grid` is the profile grid.
    pub fn sample(&self, k: usize, grid: &Grid) -> Vec<f64> {
        if grid.matches(&self.grid) {
            return self.profiles[k - 1].values().to_vec();
        }
        (0..grid.len()).map(|i| self.eval(k, grid.point(i))).collect()
    }
}

/// `θ(b) = Σ_{k=2}^K β_k b^k`.
pub fn theta(ps: &ProfileSet, b: f64) -> f64 {
    (2..=ps.order).map(|k| ps.beta(k) * libm::pow(b, k as f64)).sum()
}

/// Coefficient of `b^k` in `(a_0 + a_1 b + ... )^5`, for `a` truncated at degree `k`.
fn fifth_power_coefficient(a: &[f64], k: usize) -> f64 {
    let mut p = vec![0.0; k + 1];
    p[..=k.min(a.len() - 1)].copy_from_slice(&a[..=k.min(a.len() - 1)]);
    let base = p.clone();
    for _ in 0..4 {
        let mut next = vec![0.0; k + 1];
        for (i, pi) in p.iter().enumerate() {
            if *pi == 0.0 {
                continue;
            }
            for (j, bj) in base.iter().enumerate().take(k + 1 - i) {
                next[i + j] += pi * bj;
            }
        }
        p = next;
    }
    p[k]
}

fn lambda_of(f: &GridFunction) -> Result<GridFunction> {
    let d = differentiate(f, 1)?;
    f.map_with_point(|_, v| 0.5 * v)
        .zip_map(&d.map_with_point(|y, v| y * v), |a, b| a + b)
}

/// Runs the recursion up to order `K` on `grid` (a line grid reaching at least `y = -60`
/// on the left and `y = 30` on the right).
pub fn build_profiles(order: usize, grid: &Grid) -> Result<ProfileSet> {
    let op = LinearizedOperator::new(grid)?;
    build_profiles_with(order, &op)
}

pub fn build_profiles_with(order: usize, op: &LinearizedOperator) -> Result<ProfileSet> {
    if order == 0 || order > MAX_ORDER {
        return Err(Error::InvalidInput(format!("K = {order} outside [1, {MAX_ORDER}]")));
    }
    let grid = *op.grid();
    if grid.left() > -60.0 || grid.right() < 30.0 {
        return Err(Error::Domain(format!(
            "profile grid [{}, {}] must contain [-60, 30]",
            grid.left(),
            grid.right()
        )));
    }
    let n = grid.len();
    let y_left = -grid.left();
    let window: Vec<usize> = (0..n).filter(|&i| grid.point(i) <= -0.5 * y_left).collect();
    let q = grid.sample(soliton::q);
    let qp = op.q_prime().clone();
    let lq = grid.sample(soliton::lambda_q);
    let q4: Vec<f64> = q.values().iter().map(|v| 5.0 * libm::pow(*v, 4.0)).collect();
    let qp_norm2 = inner(&qp, &qp)?;

    let mut profiles: Vec<GridFunction> = Vec::new();
    let mut basis: Vec<GridFunction> = Vec::new(); // LP_j = Ω_j - G_j
    let mut betas: Vec<f64> = Vec::new();
    let mut left_coeffs = Vec::new();
    let mut d_coeffs = Vec::new();
    let mut left_fit_residuals = Vec::new();
    let mut solvability = Vec::new();
    let mut q_prime_pairings = Vec::new();
    let mut q_pairings = Vec::new();
    let mut pq = 0.0;

    for k in 1..=order {
        // Ω_k from the series Q + Σ_{i<k} b^i P_i
        let omega: Vec<f64> = (0..n)
            .map(|i| {
                let mut a = vec![0.0; k + 1];
                a[0] = q.values()[i];
                for (j, p) in profiles.iter().enumerate() {
                    a[j + 1] = p.values()[i];
                }
                fifth_power_coefficient(&a, k)
            })
            .collect();
        let omega = GridFunction::new(grid, omega)?;
        let prev = if k == 1 { q.clone() } else { profiles[k - 2].clone() };
        let lambda_prev = lambda_of(&prev)?;

        // β_k from the solvability condition; Θ_k without its β_k P_1 term first
        let mut theta_rest = grid.zeros();
        for i in 2..k {
            theta_rest = theta_rest.axpy(i as f64 * betas[k + 1 - i - 2], &profiles[i - 1])?;
        }
        let beta_k = if k >= 2 {
            let num = -inner(&omega, &qp)? - inner(&prev, &lq)? - inner(&theta_rest, &q)?;
            let b = num / pq;
            betas.push(b);
            b
        } else {
            0.0
        };
        let mut theta_k = theta_rest;
        if k >= 2 {
            theta_k = theta_k.axpy(beta_k, &profiles[0])?;
        }
        let flux = lambda_prev.axpy(-1.0, &theta_k)?;
        let g = cumulative_from_right(&flux)?;
        let dflux = differentiate(&flux, 1)?;
        let s0: Vec<f64> = (0..n)
            .map(|i| omega.values()[i] + dflux.values()[i] - q4[i] * g.values()[i])
            .collect();
        let mut s = GridFunction::new(grid, s0)?;

        // d_{j,k}: cancel the left polynomial part of S_k
        let mut d = Vec::new();
        if k >= 3 {
            let m = k - 2;
            let a = DenseMatrix::from_fn(window.len(), m, |r, j| basis[j].values()[window[r]]);
            let rhs: Vec<f64> = window.iter().map(|&i| -s.values()[i]).collect();
            d = least_squares(&a, &rhs)
                .map_err(|e| Error::Degenerate(format!("polynomial cancellation at level {k}: {e}")))?;
            for (j, dj) in d.iter().enumerate() {
                s = s.axpy(*dj, &basis[j])?;
            }
        }

        let s_norm = libm::sqrt(inner(&s, &s)?);
        let pairing = inner(&s, &qp)?;
        let rel = pairing.abs() / (s_norm * libm::sqrt(qp_norm2)).max(f64::MIN_POSITIVE);
        solvability.push(rel);
        if rel > SOLVABILITY_TOLERANCE {
            return Err(Error::Construction(format!(
                "level {k}: |(S, Q')| relative {rel:.3e} exceeds {SOLVABILITY_TOLERANCE:e}"
            )));
        }
        let s = s.axpy(-pairing / qp_norm2, &qp)?;
        let tilde = solve_l(op, &s)?;

        let mut p = tilde.axpy(-1.0, &g)?;
        for (j, dj) in d.iter().enumerate() {
            p = p.axpy(-dj, &profiles[j])?;
        }
        let a = inner(&p, &qp)? / qp_norm2;
        let p = p.axpy(-a, &qp)?;

        // left polynomial: fit in z = y/Y for conditioning
        let zs: Vec<f64> = window.iter().map(|&i| grid.point(i) / y_left).collect();
        let vs: Vec<f64> = window.iter().map(|&i| p.values()[i]).collect();
        let fit = polyfit(&zs, &vs, k - 1)?;
        let scale = vs.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        left_fit_residuals.push(fit.rms_residual / scale);
        // ascending a_m z^m = a_m/Y^m y^m, c_{j,k} multiplies y^{k-j}
        let c: Vec<f64> = (1..=k)
            .map(|j| {
                let m = k - j;
                fit.coefficients[m] / libm::pow(y_left, m as f64)
            })
            .collect();
        if c[0].abs() < 1e-10 {
            return Err(Error::Degenerate(format!("leading left coefficient of P_{k} vanishes")));
        }

        if k == 1 {
            pq = inner(&p, &q)?;
        }
        q_prime_pairings.push(inner(&p, &qp)?);
        q_pairings.push(inner(&p, &q)?);
        basis.push(omega.axpy(-1.0, &g)?);
        left_coeffs.push(c);
        d_coeffs.push(d);
        profiles.push(p);
    }

    Ok(ProfileSet {
        order,
        grid,
        profiles,
        betas,
        left_coeffs,
        d_coeffs,
        left_fit_residuals,
        solvability,
        q_prime_pairings,
        q_pairings,
        gamma_default: DEFAULT_GAMMA,
    })
}

/// `C^∞` nondecreasing step on `[0, 1]`: `1/(1 + exp(1/τ - 1/(1-τ)))`, 0 below, 1 above.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        1.0 / (1.0 + libm::exp(1.0 / t - 1.0 / (1.0 - t)))
    }
}

pub fn smooth_step_prime(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        let s = smooth_step(t);
        s * (1.0 - s) * (1.0 / (t * t) + 1.0 / ((1.0 - t) * (1.0 - t)))
    }
}

/// The cut-off: 0 for `y ≤ -2`, 1 for `y ≥ -1`, `1/(1 + exp(1/(y+2) + 1/(y+1)))` in between.
pub fn chi(y: f64) -> f64 {
    smooth_step(y + 2.0)
}

pub fn chi_prime(y: f64) -> f64 {
    smooth_step_prime(y + 2.0)
}

/// `Q_b = Q + R_bχ_b` with its `b`-derivative.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalizedProfile {
    pub b: f64,
    pub gamma: f64,
    pub values: GridFunction,
    pub b_derivative: GridFunction,
}

fn check_b_gamma(b: f64, gamma: f64, allow_zero: bool) -> Result<()> {
    if !(b.abs() <= 0.2) || (!allow_zero && b == 0.0) {
        return Err(Error::InvalidInput(format!("b = {b} must satisfy 0 < |b| <= 0.2")));
    }
    if !(gamma > 0.85 && gamma <= 1.0) {
        return Err(Error::InvalidInput(format!("gamma = {gamma} outside (17/20, 1]")));
    }
    Ok(())
}

fn check_cutoff_inside(grid: &Grid, b: f64, gamma: f64) -> Result<()> {
    let reach = 2.0 * libm::pow(b.abs(), -gamma);
    if grid.left() > -reach {
        return Err(Error::Domain(format!(
            "grid starts at {} but the cut-off reaches {}",
            grid.left(),
            -reach
        )));
    }
    Ok(())
}

/// Pieces of `Q_b` sampled on a grid.
pub(crate) struct ProfilePieces {
    /// `D = R_bχ_b`.
    pub d: Vec<f64>,
    /// `∂Q_b/∂b`.
    pub db: Vec<f64>,
}

pub(crate) fn profile_pieces(ps: &ProfileSet, b: f64, gamma: f64, grid: &Grid) -> ProfilePieces {
    let n = grid.len();
    let sampled: Vec<Vec<f64>> = (1..=ps.order).map(|k| ps.sample(k, grid)).collect();
    let ab = libm::pow(b.abs(), gamma);
    let mut d = vec![0.0; n];
    let mut db = vec![0.0; n];
    for i in 0..n {
        let y = grid.point(i);
        let (cb, cbp) = if b == 0.0 {
            (1.0, 0.0)
        } else {
            (chi(ab * y), ab * chi_prime(ab * y))
        };
        let mut r = 0.0;
        let mut dr = 0.0;
        let mut rb = 0.0; // Σ b^{k-1} P_k
        for (k, p) in sampled.iter().enumerate() {
            let k = k + 1;
            let pk = p[i];
            r += libm::pow(b, k as f64) * pk;
            dr += k as f64 * libm::pow(b, (k - 1) as f64) * pk;
            rb += libm::pow(b, (k - 1) as f64) * pk;
        }
        d[i] = r * cb;
        db[i] = dr * cb + rb * gamma * y * cbp;
    }
    ProfilePieces { d, db }
}

/// `Q_b` and `∂Q_b/∂b` on the profile grid, which must contain the cut-off zone.
pub fn localized_profile(ps: &ProfileSet, b: f64, gamma: f64) -> Result<LocalizedProfile> {
    check_b_gamma(b, gamma, false)?;
    check_cutoff_inside(&ps.grid, b, gamma)?;
    localized_profile_on(ps, b, gamma, &ps.grid)
}

/// `Q_b` and `∂Q_b/∂b` on any grid. Profiles are continued by their left polynomials
/// below the profile grid. `b = 0` gives `Q` and `P_1`.
pub fn localized_profile_on(ps: &ProfileSet, b: f64, gamma: f64, grid: &Grid) -> Result<LocalizedProfile> {
    check_b_gamma(b, gamma, true)?;
    let pieces = profile_pieces(ps, b, gamma, grid);
    let values: Vec<f64> = (0..grid.len())
        .map(|i| soliton::q(grid.point(i)) + pieces.d[i])
        .collect();
    Ok(LocalizedProfile {
        b,
        gamma,
        values: GridFunction::new(*grid, values)?,
        b_derivative: GridFunction::new(*grid, pieces.db)?,
    })
}

/// `Ψ_b` on the profile grid, from
/// `-Ψ_b = (Q_b'' - Q_b + Q_b⁵)' + bΛQ_b - θ(b)∂Q_b/∂b`.
pub fn profile_residual(ps: &ProfileSet, b: f64, gamma: f64) -> Result<GridFunction> {
    check_b_gamma(b, gamma, false)?;
    check_cutoff_inside(&ps.grid, b, gamma)?;
    profile_residual_on(ps, b, gamma, &ps.grid)
}

/// `Ψ_b` on any grid (`b = 0` allowed; the residual then vanishes identically).
pub fn profile_residual_on(ps: &ProfileSet, b: f64, gamma: f64, grid: &Grid) -> Result<GridFunction> {
    check_b_gamma(b, gamma, true)?;
    let n = grid.len();
    let pieces = profile_pieces(ps, b, gamma, grid);
    let d = GridFunction::new(*grid, pieces.d)?;
    let d1 = differentiate(&d, 1)?;
    let d2 = differentiate(&d, 2)?;
    // Q'' - Q + Q⁵ = 0 is used exactly, only the D-dependent part is differentiated
    let inner_part: Vec<f64> = (0..n)
        .map(|i| {
            let qv = soliton::q(grid.point(i));
            let dv = d.values()[i];
            let q2 = qv * qv;
            let nonlinear = dv * (5.0 * q2 * q2 + dv * (10.0 * q2 * qv + dv * (10.0 * q2 + dv * (5.0 * qv + dv))));
            d2.values()[i] - dv + nonlinear
        })
        .collect();
    let inner_part = GridFunction::new(*grid, inner_part)?;
    let flux = differentiate(&inner_part, 1)?;
    let th = theta(ps, b);
    let psi: Vec<f64> = (0..n)
        .map(|i| {
            let y = grid.point(i);
            let lambda_qb = soliton::lambda_q(y) + 0.5 * d.values()[i] + y * d1.values()[i];
            -(flux.values()[i] + b * lambda_qb - th * pieces.db[i])
        })
        .collect();
    GridFunction::new(*grid, psi)
}

/// `(∫_{|y| ≤ ½|b|^{-γ}} Ψ² e^{-|y|/2})^{1/2}`.
pub fn core_residual_norm(psi: &GridFunction, b: f64, gamma: f64) -> f64 {
    let grid = psi.grid();
    let r = 0.5 * libm::pow(b.abs(), -gamma);
    let w: Vec<f64> = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let y = grid.point(i);
            if y.abs() <= r {
                v * v * libm::exp(-0.5 * y.abs())
            } else {
                0.0
            }
        })
        .collect();
    libm::sqrt(integrate_samples(grid, &w))
}

/// `∫Q_b² - ∫Q² - 2b(P, Q)`.
pub fn mass_gap(ps: &ProfileSet, b: f64, gamma: f64, grid: &Grid) -> Result<f64> {
    let lp = localized_profile_on(ps, b, gamma, grid)?;
    let q = grid.sample(soliton::q);
    let m = inner_samples(grid, lp.values.values(), lp.values.values()) - inner_samples(grid, q.values(), q.values());
    Ok(m - 2.0 * b * ps.pq_pairing())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fifth_power_series() {
        // (1 + 2b)^5 → coefficient of b² is C(5,2)·4 = 40
        assert!((fifth_power_coefficient(&[1.0, 2.0, 0.0], 2) - 40.0).abs() < 1e-12);
        // excluded top term: a = (q, p1, 0), k = 2 → 10 q³ p1²
        let v = fifth_power_coefficient(&[1.5, 0.7, 0.0], 2);
        assert!((v - 10.0 * 1.5f64.powi(3) * 0.49).abs() < 1e-12);
    }

    #[test]
    fn chi_shape() {
        assert_eq!(chi(-3.0), 0.0);
        assert_eq!(chi(0.0), 1.0);
        assert!((chi(-1.5) - 0.5).abs() < 1e-15);
        let mut last = 0.0;
        for i in 0..=1000 {
            let y = -2.0 + 1e-3 * i as f64;
            let c = chi(y);
            assert!(c >= last && (0.0..=1.0).contains(&c));
            last = c;
            let h = 1e-6;
            if y > -1.99 && y < -1.01 {
                let fd = (chi(y + h) - chi(y - h)) / (2.0 * h);
                assert!((fd - chi_prime(y)).abs() < 1e-6);
            }
        }
    }

    fn small_set(order: usize) -> ProfileSet {
        build_profiles(order, &Grid::line_with_spacing(-80.0, 32.0, 1.0 / 32.0).unwrap()).unwrap()
    }

    #[test]
    fn first_profile_identities() {
        let ps = small_set(2);
        let l1 = soliton::l1_closed_form();
        assert!((ps.pq_pairing() - l1 * l1 / 16.0).abs() < 1e-4 * l1 * l1 / 16.0);
        assert!((ps.c(1, 1) - 0.5 * l1).abs() < 1e-3);
        assert!((ps.beta(2) - 2.0).abs() < 1e-6, "{}", ps.beta(2));
        assert!(ps.q_prime_pairings.iter().all(|p| p.abs() < 1e-8));
    }

    #[test]
    fn theta_polynomial() {
        let ps = small_set(3);
        assert_eq!(theta(&ps, 0.0), 0.0);
        let b = -0.01;
        assert!((theta(&ps, b) - (ps.beta(2) * 1e-4 - ps.beta(3) * 1e-6)).abs() < 1e-15);
    }

    #[test]
    fn residual_vanishes_at_zero_b() {
        let ps = small_set(2);
        let psi = profile_residual_on(&ps, 0.0, 1.0, &ps.grid).unwrap();
        assert!(psi.max_abs() < 1e-6);
    }

    #[test]
    fn b_derivative_matches_centered_difference() {
        let ps = small_set(3);
        let grid = Grid::line_with_spacing(-60.0, 30.0, 1.0 / 16.0).unwrap();
        let (b, gamma, db) = (-0.05, 0.9, 1e-6);
        let lp = localized_profile_on(&ps, b, gamma, &grid).unwrap();
        let plus = localized_profile_on(&ps, b + db, gamma, &grid).unwrap();
        let minus = localized_profile_on(&ps, b - db, gamma, &grid).unwrap();
        let fd = plus.values.axpy(-1.0, &minus.values).unwrap().scaled(0.5 / db);
        // truncation is O(δ²) with large χ''' factors inside the transition zone
        let err = fd.axpy(-1.0, &lp.b_derivative).unwrap().max_abs();
        assert!(err < 1e-6, "{err}");
    }

    #[test]
    fn cutoff_domain_check() {
        let ps = small_set(1);
        assert!(matches!(localized_profile(&ps, -0.01, 1.0), Err(Error::Domain(_))));
        assert!(localized_profile(&ps, -0.1, 1.0).is_ok());
        assert!(localized_profile(&ps, 0.0, 1.0).is_err());
        assert!(localized_profile(&ps, -0.1, 0.8).is_err());
    }
}
