//! Ordinary least-squares helpers used by the profile and asymptotics code.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{least_squares, DenseMatrix};

/// Coefficients of a linear least-squares fit together with its residual.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

/// Fits `y ≈ Σ_j c_j·basis_j(x)`.
pub fn fit_basis(x: &[f64], y: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    if x.len() < basis.len() {
        return Err(Error::Insufficient(format!(
            "{} samples for {} unknowns",
            x.len(),
            basis.len()
        )));
    }
    let a = DenseMatrix::from_fn(x.len(), basis.len(), |i, j| basis[j](x[i]));
    let coefficients = least_squares(&a, y)?;
    let fitted = a.matvec(&coefficients);
    let ss: f64 = fitted.iter().zip(y).map(|(f, v)| (f - v) * (f - v)).sum();
    Ok(LinearFit {
        coefficients,
        rms_residual: libm::sqrt(ss / x.len() as f64),
    })
}

/// Weighted fit minimizing `Σ w_i²(y_i - Σ_j c_j·basis_j(x_i))²`; the residual is the
/// weighted root mean square.
pub fn fit_basis_weighted(x: &[f64], y: &[f64], w: &[f64], basis: &[&dyn Fn(f64) -> f64]) -> Result<LinearFit> {
    if x.len() != w.len() {
        return Err(Error::InvalidInput("x and weight lengths differ".into()));
    }
    let wy: Vec<f64> = y.iter().zip(w).map(|(y, w)| y * w).collect();
    let index: Vec<f64> = (0..x.len()).map(|i| i as f64).collect();
    let weighted: Vec<_> = basis
        .iter()
        .map(|f| move |i: f64| w[i as usize] * f(x[i as usize]))
        .collect();
    let refs: Vec<&dyn Fn(f64) -> f64> = weighted.iter().map(|f| f as &dyn Fn(f64) -> f64).collect();
    fit_basis(&index, &wy, &refs)
}

/// Polynomial fit, coefficients in ascending powers.
pub fn polyfit(x: &[f64], y: &[f64], degree: usize) -> Result<LinearFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidInput("x and y lengths differ".into()));
    }
    if x.len() <= degree {
        return Err(Error::Insufficient(format!("{} samples for degree {degree}", x.len())));
    }
    let a = DenseMatrix::from_fn(x.len(), degree + 1, |i, j| libm::pow(x[i], j as f64));
    let coefficients = least_squares(&a, y)?;
    let fitted = a.matvec(&coefficients);
    let ss: f64 = fitted.iter().zip(y).map(|(f, v)| (f - v) * (f - v)).sum();
    Ok(LinearFit {
        coefficients,
        rms_residual: libm::sqrt(ss / x.len() as f64),
    })
}

pub fn polyval(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Slope and intercept of `log|y|` against `log|x|`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    let (lx, ly): (Vec<f64>, Vec<f64>) = x
        .iter()
        .zip(y)
        .map(|(a, b)| (libm::log(a.abs()), libm::log(b.abs())))
        .unzip();
    if lx.iter().chain(&ly).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("log-log fit needs nonzero finite data".into()));
    }
    let fit = polyfit(&lx, &ly, 1)?;
    Ok((fit.coefficients[1], fit.coefficients[0]))
}

/// Median of a slice (mean of the two middle values for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slope_of_power_law() {
        let x: Vec<f64> = (1..20).map(|i| 0.01 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * libm::pow(*v, 2.5)).collect();
        let (s, c) = log_log_slope(&x, &y).unwrap();
        assert!((s - 2.5).abs() < 1e-12);
        assert!((c - libm::log(3.0)).abs() < 1e-10);
    }

    #[test]
    fn basis_fit() {
        let x: Vec<f64> = (0..30).map(|i| 0.1 + 0.05 * i as f64).collect();
        let y: Vec<f64> = x.iter().map(|t| 2.0 * t - 0.3 * t * t * t + 1.0 / t).collect();
        let f = fit_basis(&x, &y, &[&|t| t, &|t| t * t * t, &|t| 1.0 / t]).unwrap();
        assert!((f.coefficients[0] - 2.0).abs() < 1e-10);
        assert!((f.coefficients[1] + 0.3).abs() < 1e-10);
        assert!(f.rms_residual < 1e-12);
    }

    #[test]
    fn median_basics() {
        assert_eq!(median(&[]), None);
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
    }

    proptest! {
        #[test]
        fn polyfit_recovers_cubics(c in proptest::collection::vec(-5.0f64..5.0, 4)) {
            let x: Vec<f64> = (0..25).map(|i| -1.0 + 0.08 * i as f64).collect();
            let y: Vec<f64> = x.iter().map(|t| polyval(&c, *t)).collect();
            let f = polyfit(&x, &y, 3).unwrap();
            for (a, b) in f.coefficients.iter().zip(&c) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }
}
