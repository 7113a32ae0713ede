//! Uniform one-dimensional grids and sampled real functions.
//!
//! Line grids include both endpoints; periodic grids exclude the right one.
//! Derivatives on line grids use centered finite differences of formal order six with
//! one-sided closures, periodic grids differentiate spectrally.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::FftPlan;

/// Largest derivative order accepted by [`differentiate`].
pub const MAX_DERIVATIVE_ORDER: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Topology {
    Periodic,
    Line,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Grid {
    left: f64,
    right: f64,
    n: usize,
    spacing: f64,
    topology: Topology,
}

impl Grid {
    pub fn new(left: f64, right: f64, n: usize, topology: Topology) -> Result<Self> {
        if !(left.is_finite() && right.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite endpoints [{left}, {right}]")));
        }
        if n < 16 {
            return Err(Error::InvalidGrid(format!("need at least 16 points, got {n}")));
        }
        let cells = match topology {
            Topology::Periodic => n,
            Topology::Line => n - 1,
        };
        let spacing = (right - left) / cells as f64;
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("non-positive spacing on [{left}, {right}]")));
        }
        Ok(Grid {
            left,
            right,
            n,
            spacing,
            topology,
        })
    }

    /// Periodic grid on `[left, right)`.
    pub fn periodic(left: f64, right: f64, n: usize) -> Result<Self> {
        Self::new(left, right, n, Topology::Periodic)
    }

    /// Line grid with `n` points including both endpoints.
    pub fn line(left: f64, right: f64, n: usize) -> Result<Self> {
        Self::new(left, right, n, Topology::Line)
    }

    /// Line grid starting at `left` with the given spacing; the right endpoint is
    /// rounded to the nearest whole number of cells.
    pub fn line_with_spacing(left: f64, right: f64, spacing: f64) -> Result<Self> {
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("bad spacing {spacing}")));
        }
        let cells = libm::round((right - left) / spacing);
        if !(cells >= 15.0) {
            return Err(Error::InvalidGrid(format!(
                "need at least 16 points on [{left}, {right}]"
            )));
        }
        let cells = cells as usize;
        Self::line(left, left + cells as f64 * spacing, cells + 1)
    }

    /// Periodic grid of period `right - left` whose point count is `(right - left)/spacing`
    /// rounded to the nearest integer.
    pub fn periodic_with_spacing(left: f64, right: f64, spacing: f64) -> Result<Self> {
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("bad spacing {spacing}")));
        }
        let n = libm::round((right - left) / spacing);
        if !(n >= 16.0) {
            return Err(Error::InvalidGrid(format!(
                "need at least 16 points on [{left}, {right})"
            )));
        }
        Self::periodic(left, right, n as usize)
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn is_periodic(&self) -> bool {
        self.topology == Topology::Periodic
    }

    /// Domain length (the period for periodic grids).
    pub fn length(&self) -> f64 {
        self.right - self.left
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        self.left + i as f64 * self.spacing
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.point(i)).collect()
    }

    /// Samples `f` at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction {
            grid: *self,
            values: (0..self.n).map(|i| f(self.point(i))).collect(),
        }
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction {
            grid: *self,
            values: vec![0.0; self.n],
        }
    }

    /// True when `[a, b]` lies inside the grid domain.
    pub fn contains(&self, a: f64, b: f64) -> bool {
        a >= self.left - 1e-12 && b <= self.right + 1e-12
    }

    /// Same geometry, up to rounding of the endpoints.
    pub fn matches(&self, other: &Grid) -> bool {
        self.n == other.n
            && self.topology == other.topology
            && (self.left - other.left).abs() <= 1e-12 * (1.0 + self.left.abs())
            && (self.spacing - other.spacing).abs() <= 1e-12 * self.spacing
    }
}

/// Real samples on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    /// Validates length and finiteness.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite sample at index {i}")));
        }
        Ok(GridFunction { grid, values })
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        GridFunction { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise `f(y, value)`.
    pub fn map_with_point(&self, f: impl Fn(f64, f64) -> f64) -> GridFunction {
        Self::from_raw(
            self.grid,
            self.values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(self.grid.point(i), v))
                .collect(),
        )
    }

    pub fn zip_map(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<GridFunction> {
        self.check_grid(other)?;
        Ok(Self::from_raw(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn scaled(&self, a: f64) -> GridFunction {
        self.map(|v| a * v)
    }

    /// `self + a·other`.
    pub fn axpy(&self, a: f64, other: &GridFunction) -> Result<GridFunction> {
        self.zip_map(other, |x, y| x + a * y)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn check_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid.matches(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// Sixth-order local Lagrange interpolation at `x`. Periodic grids wrap; line grids
    /// return 0 outside the domain (zero extension).
    pub fn interpolate(&self, x: f64) -> f64 {
        interpolate_samples(&self.grid, &self.values, x)
    }
}

pub(crate) fn interpolate_samples(grid: &Grid, values: &[f64], x: f64) -> f64 {
    const W: usize = 7;
    let n = grid.len();
    let h = grid.spacing();
    let mut s = (x - grid.left()) / h;
    match grid.topology() {
        Topology::Periodic => {
            s -= n as f64 * libm::floor(s / n as f64);
            let base = libm::floor(s) as isize - 3;
            let frac = s - libm::floor(s);
            let mut acc = 0.0;
            let ws = lagrange_weights(W, frac + 3.0);
            for (j, w) in ws.iter().enumerate() {
                let idx = (base + j as isize).rem_euclid(n as isize) as usize;
                acc += w * values[idx];
            }
            acc
        }
        Topology::Line => {
            if s < -1e-9 || s > (n - 1) as f64 + 1e-9 {
                return 0.0;
            }
            let s = s.clamp(0.0, (n - 1) as f64);
            let cell = (libm::floor(s) as usize).min(n - 2);
            let start = (cell as isize - 3).clamp(0, (n - W) as isize) as usize;
            let ws = lagrange_weights(W, s - start as f64);
            ws.iter().zip(&values[start..start + W]).map(|(w, v)| w * v).sum()
        }
    }
}

/// Lagrange basis weights for nodes `0, 1, ..., count-1` evaluated at `t`.
fn lagrange_weights(count: usize, t: f64) -> [f64; 8] {
    let mut out = [0.0; 8];
    for (j, o) in out.iter_mut().enumerate().take(count) {
        let mut w = 1.0;
        for k in 0..count {
            if k != j {
                w *= (t - k as f64) / (j as f64 - k as f64);
            }
        }
        *o = w;
    }
    out
}

/// Finite-difference weights (Fornberg's algorithm).
///
/// Returns `c` with `c[m][j]` the weight of `f(x[j])` in the approximation of the
/// `m`-th derivative at `z`, for `m = 0..=max_order`.
pub fn fd_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Half-width of the centered interior stencil for derivative order `m` (formal order 6).
pub(crate) fn interior_half_width(m: usize) -> usize {
    (2 * m.div_ceil(2) - 1 + 6) / 2
}

/// Stencil table for derivative order `m` on a line grid of `n` points with spacing `h`.
pub(crate) struct Stencils {
    half: usize,
    interior: Vec<f64>,
    // (start index, weights) for each of the first and last `half` rows
    left: Vec<(usize, Vec<f64>)>,
    right: Vec<(usize, Vec<f64>)>,
}

impl Stencils {
    pub(crate) fn new(m: usize, n: usize, h: f64) -> Self {
        let half = interior_half_width(m);
        let scale = libm::pow(h, -(m as f64));
        let nodes: Vec<f64> = (0..2 * half + 1).map(|j| j as f64 - half as f64).collect();
        let interior: Vec<f64> = fd_weights(0.0, &nodes, m)[m].iter().map(|w| w * scale).collect();
        let width = (m + 6).max(2 * half + 1).min(n);
        let mut left = Vec::with_capacity(half);
        let mut right = Vec::with_capacity(half);
        let local: Vec<f64> = (0..width).map(|j| j as f64).collect();
        for i in 0..half.min(n) {
            let w: Vec<f64> = fd_weights(i as f64, &local, m)[m].iter().map(|w| w * scale).collect();
            left.push((0, w));
            let zr = (width - 1 - i) as f64;
            let w: Vec<f64> = fd_weights(zr, &local, m)[m].iter().map(|w| w * scale).collect();
            right.push((n - width, w));
        }
        Stencils {
            half,
            interior,
            left,
            right,
        }
    }

    pub(crate) fn apply(&self, f: &[f64]) -> Vec<f64> {
        let n = f.len();
        let mut out = vec![0.0; n];
        let p = self.half;
        for i in p..n.saturating_sub(p) {
            out[i] = self.interior.iter().zip(&f[i - p..=i + p]).map(|(w, v)| w * v).sum();
        }
        for (i, (start, w)) in self.left.iter().enumerate() {
            out[i] = w.iter().zip(&f[*start..]).map(|(a, b)| a * b).sum();
        }
        for (i, (start, w)) in self.right.iter().enumerate() {
            out[n - 1 - i] = w.iter().zip(&f[*start..]).map(|(a, b)| a * b).sum();
        }
        out
    }
}

/// Wavenumbers `2πj/L` in FFT order (the Nyquist mode gets the positive sign).
pub fn wavenumbers(grid: &Grid) -> Vec<f64> {
    let n = grid.len();
    let base = 2.0 * core::f64::consts::PI / grid.length();
    (0..n)
        .map(|j| {
            let j = if j <= n / 2 {
                j as isize
            } else {
                j as isize - n as isize
            };
            base * j as f64
        })
        .collect()
}

fn spectral_derivative(grid: &Grid, f: &[f64], m: usize) -> Vec<f64> {
    let n = grid.len();
    let plan = FftPlan::new(n);
    let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    let ks = wavenumbers(grid);
    for (j, (z, &k)) in buf.iter_mut().zip(&ks).enumerate() {
        if m % 2 == 1 && n % 2 == 0 && j == n / 2 {
            *z = Complex64::new(0.0, 0.0);
            continue;
        }
        *z *= Complex64::new(0.0, k).powu(m as u32);
    }
    plan.inverse(&mut buf);
    buf.iter().map(|z| z.re).collect()
}

/// The `order`-th derivative of `f` on its own grid.
pub fn differentiate(f: &GridFunction, order: usize) -> Result<GridFunction> {
    if order > MAX_DERIVATIVE_ORDER {
        return Err(Error::UnsupportedOrder {
            order,
            max: MAX_DERIVATIVE_ORDER,
        });
    }
    if order == 0 {
        return Ok(f.clone());
    }
    let grid = *f.grid();
    let values = match grid.topology() {
        Topology::Periodic => spectral_derivative(&grid, f.values(), order),
        Topology::Line => Stencils::new(order, grid.len(), grid.spacing()).apply(f.values()),
    };
    Ok(GridFunction::from_raw(grid, values))
}

/// Trapezoidal quadrature (rectangle rule on periodic grids).
pub fn integrate(f: &GridFunction) -> f64 {
    integrate_samples(f.grid(), f.values())
}

pub(crate) fn integrate_samples(grid: &Grid, v: &[f64]) -> f64 {
    let sum: f64 = v.iter().sum();
    let h = grid.spacing();
    match grid.topology() {
        Topology::Periodic => h * sum,
        Topology::Line => h * (sum - 0.5 * (v[0] + v[v.len() - 1])),
    }
}

/// L² inner product by the grid quadrature.
pub fn inner(f: &GridFunction, g: &GridFunction) -> Result<f64> {
    f.check_grid(g)?;
    Ok(inner_samples(f.grid(), f.values(), g.values()))
}

pub(crate) fn inner_samples(grid: &Grid, a: &[f64], b: &[f64]) -> f64 {
    let h = grid.spacing();
    let sum: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    match grid.topology() {
        Topology::Periodic => h * sum,
        Topology::Line => {
            let n = a.len();
            h * (sum - 0.5 * (a[0] * b[0] + a[n - 1] * b[n - 1]))
        }
    }
}

pub fn l2_norm(f: &GridFunction) -> f64 {
    libm::sqrt(inner_samples(f.grid(), f.values(), f.values()))
}

/// `(∫(∂ᵐf)² e^{y/B})^{1/2}`; pass `f64::INFINITY` for the unweighted seminorm.
pub fn weighted_norm(f: &GridFunction, m: usize, b: f64) -> Result<f64> {
    if m > 5 {
        return Err(Error::UnsupportedOrder { order: m, max: 5 });
    }
    if b.is_nan() || b <= 1.0 {
        return Err(Error::InvalidInput(format!("weight scale B = {b} must exceed 1")));
    }
    let d = differentiate(f, m)?;
    let grid = f.grid();
    let sq: Vec<f64> = if b.is_infinite() {
        d.values().iter().map(|v| v * v).collect()
    } else {
        d.values()
            .iter()
            .enumerate()
            .map(|(i, v)| v * v * libm::exp(grid.point(i) / b))
            .collect()
    };
    Ok(libm::sqrt(integrate_samples(grid, &sq)))
}

/// `G(y_i) = ∫_{y_i}^{right} f`, sixth-order accurate (piecewise integration of the local
/// degree-6 interpolant). Line grids only.
pub fn cumulative_from_right(f: &GridFunction) -> Result<GridFunction> {
    let grid = *f.grid();
    if grid.is_periodic() {
        return Err(Error::InvalidInput("cumulative integral needs a line grid".into()));
    }
    let n = grid.len();
    let h = grid.spacing();
    const W: usize = 7;
    // cell [s, s+1] inside a 7-node window, s = 0..=5
    let table: Vec<[f64; 8]> = (0..W - 1).map(|s| cell_weights(W, s)).collect();
    let v = f.values();
    let mut out = vec![0.0; n];
    for cell in (0..n - 1).rev() {
        let start = (cell as isize - 3).clamp(0, (n - W) as isize) as usize;
        let w = &table[cell - start];
        let piece: f64 = (0..W).map(|j| w[j] * v[start + j]).sum();
        out[cell] = out[cell + 1] + h * piece;
    }
    Ok(GridFunction::from_raw(grid, out))
}

// ∫_s^{s+1} of each Lagrange basis polynomial, by 4-point Gauss-Legendre (exact to degree 7).
fn cell_weights(count: usize, s: usize) -> [f64; 8] {
    let a = libm::sqrt(3.0 / 7.0 - 2.0 / 7.0 * libm::sqrt(6.0 / 5.0));
    let b = libm::sqrt(3.0 / 7.0 + 2.0 / 7.0 * libm::sqrt(6.0 / 5.0));
    let wa = (18.0 + libm::sqrt(30.0)) / 36.0;
    let wb = (18.0 - libm::sqrt(30.0)) / 36.0;
    let nodes = [(-b, wb), (-a, wa), (a, wa), (b, wb)];
    let mut out = [0.0; 8];
    for (x, w) in nodes {
        let t = s as f64 + 0.5 + 0.5 * x;
        let l = lagrange_weights(count, t);
        for j in 0..count {
            out[j] += 0.5 * w * l[j];
        }
    }
    out
}

/// Band-limited interpolation of a periodic function onto a grid `factor` times finer.
pub fn upsample_periodic(f: &GridFunction, factor: usize) -> Result<GridFunction> {
    let grid = *f.grid();
    if !grid.is_periodic() {
        return Err(Error::InvalidInput("spectral upsampling needs a periodic grid".into()));
    }
    if factor <= 1 {
        return Ok(f.clone());
    }
    let n = grid.len();
    let m = n * factor;
    let fine = Grid::periodic(grid.left(), grid.right(), m)?;
    let plan = FftPlan::new(n);
    let mut buf: Vec<Complex64> = f.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    let mut big = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for j in 0..n {
        if n % 2 == 0 && j == half {
            // split the Nyquist mode symmetrically
            big[half] += buf[j] * 0.5;
            big[m - half] += buf[j] * 0.5;
        } else if j < half + (n % 2) || (n % 2 == 1 && j == half) {
            big[j] = buf[j];
        } else {
            big[m - (n - j)] = buf[j];
        }
    }
    let fine_plan = FftPlan::new(m);
    fine_plan.inverse(&mut big);
    let scale = factor as f64;
    Ok(GridFunction::from_raw(fine, big.iter().map(|z| z.re * scale).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn q(x: f64) -> f64 {
        libm::pow(3.0 / libm::pow(libm::cosh(2.0 * x), 2.0), 0.25)
    }

    fn dq(x: f64) -> f64 {
        -q(x) * libm::tanh(2.0 * x)
    }

    #[test]
    fn grid_validation() {
        assert!(Grid::line(0.0, 1.0, 15).is_err());
        assert!(Grid::line(1.0, 0.0, 32).is_err());
        let g = Grid::periodic(0.0, 2.0 * PI, 64).unwrap();
        assert!((g.spacing() - 2.0 * PI / 64.0).abs() < 1e-15);
        let l = Grid::line(0.0, 1.0, 17).unwrap();
        assert!((l.spacing() - 1.0 / 16.0).abs() < 1e-15);
        let w = Grid::line_with_spacing(-120.0, 40.0, 1.0 / 64.0).unwrap();
        assert_eq!(w.len(), 160 * 64 + 1);
    }

    #[test]
    fn derivative_of_q_matches_closed_form() {
        let g = Grid::line(-20.0, 20.0, 4096).unwrap();
        let d = differentiate(&g.sample(q), 1).unwrap();
        let err = d
            .values()
            .iter()
            .enumerate()
            .fold(0.0f64, |m, (i, v)| m.max((v - dq(g.point(i))).abs()));
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn stencils_are_exact_on_polynomials() {
        let g = Grid::line(-1.0, 2.0, 40).unwrap();
        for m in 1..=6 {
            let f = g.sample(|x| libm::pow(x, 6.0) - 2.0 * x * x * x);
            let d = differentiate(&f, m).unwrap();
            for (i, v) in d.values().iter().enumerate() {
                let x = g.point(i);
                let exact = match m {
                    1 => 6.0 * libm::pow(x, 5.0) - 6.0 * x * x,
                    2 => 30.0 * libm::pow(x, 4.0) - 12.0 * x,
                    3 => 120.0 * x * x * x - 12.0,
                    4 => 360.0 * x * x,
                    5 => 720.0 * x,
                    _ => 720.0,
                };
                // round-off grows like eps·h^{-m}
                let tol = 1e-12 * libm::pow(g.spacing(), -(m as f64)) * 1e2;
                assert!((v - exact).abs() < tol * (1.0 + exact.abs()), "m={m} i={i} {v} {exact}");
            }
        }
    }

    #[test]
    fn spectral_derivative_is_exact() {
        let g = Grid::periodic(0.0, 2.0 * PI, 64).unwrap();
        let d = differentiate(&g.sample(|x| libm::sin(5.0 * x)), 1).unwrap();
        for (i, v) in d.values().iter().enumerate() {
            assert!((v - 5.0 * libm::cos(5.0 * g.point(i))).abs() < 1e-12);
        }
        let c = differentiate(&g.sample(|_| 1.0), 3).unwrap();
        assert!(c.max_abs() < 1e-12);
    }

    #[test]
    fn order_limit() {
        let g = Grid::line(0.0, 1.0, 32).unwrap();
        assert_eq!(
            differentiate(&g.zeros(), 7),
            Err(Error::UnsupportedOrder { order: 7, max: 6 })
        );
        assert!(weighted_norm(&g.zeros(), 6, f64::INFINITY).is_err());
    }

    #[test]
    fn quadrature_closed_forms() {
        let g = Grid::line(-30.0, 30.0, 6001).unwrap();
        let s = integrate(&g.sample(|x| 1.0 / libm::cosh(2.0 * x)));
        assert!((s - PI / 2.0).abs() < 1e-8);
        let odd = integrate(&g.sample(|x| x * libm::exp(-x * x)));
        assert!(odd.abs() < 1e-12);
        let qq = g.sample(q);
        let m = inner(&qq, &qq).unwrap();
        assert!((m - libm::sqrt(3.0) * PI / 2.0).abs() < 1e-8);
        let dq = g.sample(dq);
        assert!(inner(&qq, &dq).unwrap().abs() < 1e-10);
    }

    #[test]
    fn weighted_norm_matches_direct_quadrature() {
        let g = Grid::line(-40.0, 40.0, 8001).unwrap();
        let f = g.sample(q);
        let direct = integrate(&g.sample(|x| q(x) * q(x) * libm::exp(x / 10.0)));
        let w = weighted_norm(&f, 0, 10.0).unwrap();
        assert!((w * w - direct).abs() < 1e-10);
        let plain = weighted_norm(&f, 0, f64::INFINITY).unwrap();
        assert!((plain - libm::sqrt(inner(&f, &f).unwrap())).abs() < 1e-14);
        assert!((plain * plain - libm::sqrt(3.0) * PI / 2.0).abs() < 1e-8);
    }

    #[test]
    fn cumulative_integral_of_gaussian() {
        let g = Grid::line(-10.0, 10.0, 801).unwrap();
        let f = g.sample(|x| libm::exp(-x * x));
        let c = cumulative_from_right(&f).unwrap();
        for (i, v) in c.values().iter().enumerate() {
            let exact = 0.5 * libm::sqrt(PI) * libm::erfc(g.point(i));
            assert!((v - exact).abs() < 1e-10, "{i}");
        }
    }

    #[test]
    fn interpolation_and_upsampling() {
        let g = Grid::periodic(-PI, PI, 64).unwrap();
        let f = g.sample(|x| libm::cos(3.0 * x) + 0.5 * libm::sin(x));
        for &x in &[-3.0, 0.123, 1.7, 3.1, 7.0] {
            let e = libm::cos(3.0 * x) + 0.5 * libm::sin(x);
            assert!((f.interpolate(x) - e).abs() < 1e-5);
        }
        let up = upsample_periodic(&f, 4).unwrap();
        for (i, v) in up.values().iter().enumerate() {
            let x = up.grid().point(i);
            assert!((v - (libm::cos(3.0 * x) + 0.5 * libm::sin(x))).abs() < 1e-12);
        }
        let l = Grid::line(-20.0, 20.0, 4001).unwrap();
        let qf = l.sample(q);
        assert!((qf.interpolate(0.3333) - q(0.3333)).abs() < 1e-10);
        assert_eq!(qf.interpolate(25.0), 0.0);
    }
}
