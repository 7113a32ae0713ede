//! The ground state `Q(y) = (3/cosh²(2y))^{1/4}`, the mass and energy functionals and
//! the Gagliardo–Nirenberg ratio.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{differentiate, integrate, integrate_samples, Grid, GridFunction};

/// `Q(0) = 3^{1/4}`.
pub fn q_peak() -> f64 {
    libm::pow(3.0, 0.25)
}

/// `Q(y)`.
pub fn q(y: f64) -> f64 {
    // sech computed as 2e^{-|2y|}/(1+e^{-|4y|}) to stay finite far out
    let a = libm::fabs(2.0 * y);
    let e = libm::exp(-a);
    let sech = 2.0 * e / (1.0 + e * e);
    q_peak() * libm::sqrt(sech)
}

/// `Q'(y) = -tanh(2y) Q(y)`.
pub fn q_prime(y: f64) -> f64 {
    -libm::tanh(2.0 * y) * q(y)
}

/// `Q''(y) = Q - Q⁵`.
pub fn q_second(y: f64) -> f64 {
    let v = q(y);
    v - v * v * v * v * v
}

/// `ΛQ = Q/2 + yQ'`.
pub fn lambda_q(y: f64) -> f64 {
    0.5 * q(y) + y * q_prime(y)
}

/// `(ΛQ)' = 3Q'/2 + yQ''`.
pub fn lambda_q_prime(y: f64) -> f64 {
    1.5 * q_prime(y) + y * q_second(y)
}

/// `‖Q‖²_{L²} = √3π/2`.
pub fn mass_closed_form() -> f64 {
    libm::sqrt(3.0) * PI / 2.0
}

/// `‖Q‖_{L¹} = (3^{1/4}/2)·√π·Γ(1/4)/Γ(3/4)`.
pub fn l1_closed_form() -> f64 {
    0.5 * q_peak() * libm::sqrt(PI) * libm::tgamma(0.25) / libm::tgamma(0.75)
}

/// Samples of `Q`. The grid must contain `[-15, 15]`.
pub fn ground_state(grid: &Grid) -> Result<GridFunction> {
    if !grid.contains(-15.0, 15.0) {
        return Err(Error::Domain(format!(
            "grid [{}, {}] does not contain [-15, 15]",
            grid.left(),
            grid.right()
        )));
    }
    Ok(grid.sample(q))
}

/// `M(u) = ∫u²`.
pub fn mass(u: &GridFunction) -> f64 {
    let sq: Vec<f64> = u.values().iter().map(|v| v * v).collect();
    integrate_samples(u.grid(), &sq)
}

/// `E(u) = ½∫u_x² − (1/6)∫u⁶`.
pub fn energy(u: &GridFunction) -> f64 {
    let ux = differentiate(u, 1).expect("first derivative is always supported");
    let dens: Vec<f64> = u
        .values()
        .iter()
        .zip(ux.values())
        .map(|(v, d)| {
            let v2 = v * v;
            0.5 * d * d - v2 * v2 * v2 / 6.0
        })
        .collect();
    integrate_samples(u.grid(), &dens)
}

/// `∫v⁶ / [3∫v_x² (∫v²/∫Q²)²]`, equal to 1 on rescaled solitons and at most 1 otherwise.
pub fn gn_ratio(v: &GridFunction) -> Result<f64> {
    let vx = differentiate(v, 1)?;
    let grad = integrate(&vx.map(|d| d * d));
    let m = mass(v);
    let six = integrate(&v.map(|x| libm::pow(x, 6.0)));
    let denom = 3.0 * grad * (m / mass_closed_form()) * (m / mass_closed_form());
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(Error::Degenerate(format!(
            "gradient or mass vanishes (denominator {denom:e})"
        )));
    }
    Ok(six / denom)
}

/// Constants of the soliton used throughout the toolkit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SolitonConstants {
    /// `‖Q‖²_{L²}`.
    pub mass_l2_sq: f64,
    /// `‖Q‖_{L¹}`.
    pub l1_norm: f64,
    /// `(P, Q)` once profiles have been built.
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub pq_pairing: Option<f64>,
    /// `½‖Q‖_{L¹}`, the magnitude of the left tail `|x|^{3/2}S(t, x)`.
    pub tail_coefficient: f64,
}

impl SolitonConstants {
    /// Quadrature on the reference grid `[-40, 40]`, spacing `1/256`.
    pub fn compute() -> Self {
        let grid = Grid::line_with_spacing(-40.0, 40.0, 1.0 / 256.0).expect("reference grid");
        Self::on_grid(&grid)
    }

    pub fn on_grid(grid: &Grid) -> Self {
        let qf = grid.sample(q);
        let l1_norm = integrate(&qf.map(libm::fabs));
        SolitonConstants {
            mass_l2_sq: mass(&qf),
            l1_norm,
            pq_pairing: None,
            tail_coefficient: 0.5 * l1_norm,
        }
    }

    pub fn with_pq_pairing(mut self, pq: f64) -> Self {
        self.pq_pairing = Some(pq);
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_and_symmetry() {
        assert!((q(0.0) - 1.316_074_012_952_492).abs() < 1e-14);
        for i in 0..100 {
            let y = 0.173 * i as f64;
            assert_eq!(q(y), q(-y));
        }
        assert!(q(150.0) > 0.0 && q(400.0) == 0.0);
    }

    #[test]
    fn euler_lagrange_residual() {
        let g = Grid::line_with_spacing(-20.0, 20.0, 1.0 / 128.0).unwrap();
        let qf = ground_state(&g).unwrap();
        let d2 = differentiate(&qf, 2).unwrap();
        let res = d2
            .values()
            .iter()
            .zip(qf.values())
            .fold(0.0f64, |m, (a, v)| m.max((a + libm::pow(*v, 5.0) - v).abs()));
        assert!(res < 1e-6, "{res}");
    }

    #[test]
    fn domain_check() {
        let g = Grid::line(-10.0, 10.0, 100).unwrap();
        assert!(matches!(ground_state(&g), Err(Error::Domain(_))));
    }

    #[test]
    fn constants_match_closed_forms() {
        let c = SolitonConstants::compute();
        assert!((c.mass_l2_sq - mass_closed_form()).abs() < 1e-8);
        assert!((c.l1_norm - l1_closed_form()).abs() < 1e-8);
        assert_eq!(c.tail_coefficient, c.l1_norm / 2.0);
        assert!((c.l1_norm - 3.4508).abs() < 1e-4);
    }

    #[test]
    fn energy_and_gn_equality() {
        let g = Grid::line_with_spacing(-40.0, 40.0, 1.0 / 128.0).unwrap();
        let qf = g.sample(q);
        assert!(energy(&qf).abs() < 1e-8);
        assert!(energy(&g.zeros()).abs() == 0.0);
        assert!((gn_ratio(&qf).unwrap() - 1.0).abs() < 1e-6);
        let scaled = g.sample(|x| libm::sqrt(0.6) * q(0.6 * x));
        assert!((gn_ratio(&scaled).unwrap() - 1.0).abs() < 1e-6);
        assert!(gn_ratio(&g.sample(|x| libm::exp(-x * x))).unwrap() < 1.0);
        assert!(matches!(gn_ratio(&g.zeros()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn scaling_criticality() {
        let g = Grid::line_with_spacing(-40.0, 40.0, 1.0 / 128.0).unwrap();
        let lq = g.sample(lambda_q);
        let qf = g.sample(q);
        assert!(crate::grid::inner(&lq, &qf).unwrap().abs() < 1e-10);
        let dlq = differentiate(&lq, 1).unwrap();
        let exact = g.sample(lambda_q_prime);
        assert!(dlq.axpy(-1.0, &exact).unwrap().max_abs() < 1e-8);
    }
}
