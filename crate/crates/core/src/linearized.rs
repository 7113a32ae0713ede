//! The linearized operator `L = -∂² + 1 - 5Q⁴` on a truncated line grid.
//!
//! The assembled matrix uses the centered sixth-order second-difference stencil with
//! homogeneous Dirichlet data outside the grid, so it is exactly symmetric. Constrained
//! inversion solves the bordered system `[L, Q'; Q'ᵀ, 0]`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{differentiate, fd_weights, inner_samples, Grid, GridFunction, Topology};
use crate::linalg::{cholesky, symmetric_eigen, BandedLu, BandedMatrix, DenseMatrix};
use crate::soliton;

const HALF: usize = 3;

pub struct LinearizedOperator {
    grid: Grid,
    potential: GridFunction,
    q_prime: GridFunction,
    matrix: BandedMatrix,
    pinned: BandedLu,
    pin: usize,
    // trapezoid weights times Q'
    constraint: Vec<f64>,
    // B⁻¹ applied to the constraint vector and to the pinned unit vector
    b_inv_constraint: Vec<f64>,
    b_inv_pin: Vec<f64>,
}

/// Output of [`spectrum_summary`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpectrumSummary {
    pub n_negative: usize,
    pub kernel_dim: usize,
    pub min_constrained_quadratic_form: f64,
    /// Eigenvalue of smallest magnitude.
    pub kernel_eigenvalue: f64,
    /// `|(φ, Q')|/(‖φ‖‖Q'‖)` for the kernel eigenvector `φ`.
    pub kernel_correlation: f64,
    /// Threshold under which an eigenvalue counts as zero.
    pub zero_threshold: f64,
}

fn second_difference_weights(h: f64) -> Vec<f64> {
    let nodes: Vec<f64> = (0..=2 * HALF).map(|j| j as f64 - HALF as f64).collect();
    fd_weights(0.0, &nodes, 2)[2].iter().map(|w| w / (h * h)).collect()
}

fn assemble(grid: &Grid, potential: &[f64], shift: f64) -> BandedMatrix {
    let n = grid.len();
    let w = second_difference_weights(grid.spacing());
    let mut m = BandedMatrix::zeros(n, HALF, HALF);
    for i in 0..n {
        for (k, wk) in w.iter().enumerate() {
            let j = i as isize + k as isize - HALF as isize;
            if j >= 0 && (j as usize) < n {
                m.set(i, j as usize, -wk);
            }
        }
        m.add(i, i, 1.0 - potential[i] - shift);
    }
    m
}

impl LinearizedOperator {
    /// Assembles `L` on a line grid containing `[-15, 15]`.
    pub fn new(grid: &Grid) -> Result<Self> {
        if grid.topology() != Topology::Line {
            return Err(Error::InvalidGrid("the linearized operator needs a line grid".into()));
        }
        let qf = soliton::ground_state(grid)?;
        let potential = qf.map(|v| 5.0 * v * v * v * v);
        let q_prime = grid.sample(soliton::q_prime);
        let matrix = assemble(grid, potential.values(), 0.0);

        let n = grid.len();
        let h = grid.spacing();
        let pin = libm::round((-0.5 - grid.left()) / h) as usize;
        let mut b = matrix.clone();
        b.set_identity_row(pin);
        let pinned = b.factor()?;

        let mut constraint: Vec<f64> = q_prime.values().iter().map(|v| v * h).collect();
        constraint[0] *= 0.5;
        constraint[n - 1] *= 0.5;
        let b_inv_constraint = pinned.solve(&constraint);
        let mut e = vec![0.0; n];
        e[pin] = 1.0;
        let b_inv_pin = pinned.solve(&e);
        Ok(LinearizedOperator {
            grid: *grid,
            potential,
            q_prime,
            matrix,
            pinned,
            pin,
            constraint,
            b_inv_constraint,
            b_inv_pin,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `5Q⁴` sampled.
    pub fn potential(&self) -> &GridFunction {
        &self.potential
    }

    pub fn q_prime(&self) -> &GridFunction {
        &self.q_prime
    }

    pub fn matrix(&self) -> &BandedMatrix {
        &self.matrix
    }

    // uᵀx where A = B + e_pin uᵀ
    fn correction(&self, x: &[f64]) -> f64 {
        let row: f64 = self
            .matrix
            .row_range(self.pin)
            .map(|j| self.matrix.get(self.pin, j) * x[j])
            .sum();
        row - x[self.pin]
    }

    fn bordered_solve(&self, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        let x0 = self.pinned.solve(rhs);
        let (xq, xe) = (&self.b_inv_constraint, &self.b_inv_pin);
        // ν(1 + uᵀxe) + μ uᵀxq = uᵀx0 ;  ν qᵀxe + μ qᵀxq = qᵀx0
        let a11 = 1.0 + self.correction(xe);
        let a12 = self.correction(xq);
        let r1 = self.correction(&x0);
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let a21 = dot(&self.constraint, xe);
        let a22 = dot(&self.constraint, xq);
        let r2 = dot(&self.constraint, &x0);
        let det = a11 * a22 - a12 * a21;
        if !(det.abs() > 1e-300) || !det.is_finite() {
            return Err(Error::Singular("bordered system capacitance matrix is singular".into()));
        }
        let nu = (r1 * a22 - a12 * r2) / det;
        let mu = (a11 * r2 - a21 * r1) / det;
        let f: Vec<f64> = x0
            .iter()
            .zip(xq.iter().zip(xe))
            .map(|(a, (b, c))| a - mu * b - nu * c)
            .collect();
        Ok((f, mu))
    }
}

/// `-f'' + f - 5Q⁴f`.
pub fn apply_l(op: &LinearizedOperator, f: &GridFunction) -> Result<GridFunction> {
    if !f.grid().matches(&op.grid) {
        return Err(Error::GridMismatch);
    }
    let d2 = differentiate(f, 2)?;
    let values = f
        .values()
        .iter()
        .zip(d2.values())
        .zip(op.potential.values())
        .map(|((v, d), p)| -d + v - p * v)
        .collect();
    GridFunction::new(op.grid, values)
}

/// The unique `f ⊥ Q'` with `Lf = h`; requires `|(h, Q')| ≤ 10⁻⁸‖h‖`.
pub fn solve_l(op: &LinearizedOperator, h: &GridFunction) -> Result<GridFunction> {
    if !h.grid().matches(&op.grid) {
        return Err(Error::GridMismatch);
    }
    let norm = libm::sqrt(inner_samples(&op.grid, h.values(), h.values()));
    let pairing = inner_samples(&op.grid, h.values(), op.q_prime.values());
    let limit = 1e-8 * norm;
    if pairing.abs() > limit && pairing.abs() > 1e-300 {
        return Err(Error::Solvability {
            pairing: pairing.abs(),
            limit,
        });
    }
    let rhs = h.values();
    let (mut f, _) = op.bordered_solve(rhs)?;
    // one step of iterative refinement on the bordered system
    let af = op.matrix.matvec(&f);
    let r: Vec<f64> = rhs.iter().zip(&af).map(|(a, b)| a - b).collect();
    let rc: f64 = -op.constraint.iter().zip(&f).map(|(a, b)| a * b).sum::<f64>();
    let (mut df, _) = op.bordered_solve(&r)?;
    // fold the constraint residual in along Q'
    let qq: f64 = op.constraint.iter().zip(op.q_prime.values()).map(|(a, b)| a * b).sum();
    if qq > 0.0 {
        for (d, q) in df.iter_mut().zip(op.q_prime.values()) {
            *d += rc / qq * q;
        }
    }
    for (a, b) in f.iter_mut().zip(&df) {
        *a += b;
    }
    GridFunction::new(op.grid, f)
}

// Sylvester inertia: number of eigenvalues of the symmetric banded matrix below `shift`.
fn count_below(grid: &Grid, potential: &[f64], shift: f64) -> Result<usize> {
    let m = assemble(grid, potential, shift);
    let n = m.n();
    let p = HALF;
    // LDLᵀ without pivoting on the band; store the factor rows in a rolling dense band
    let mut l = vec![vec![0.0; p + 1]; n];
    let mut d = vec![0.0; n];
    let mut negatives = 0;
    for i in 0..n {
        for k in i.saturating_sub(p)..i {
            // L[i][k] stored at l[i][i - k]
            let mut s = m.get(i, k);
            for j in i.saturating_sub(p)..k {
                if k - j <= p {
                    s -= l[i][i - j] * l[k][k - j] * d[j];
                }
            }
            l[i][i - k] = s / d[k];
        }
        let mut s = m.get(i, i);
        for k in i.saturating_sub(p)..i {
            s -= l[i][i - k] * l[i][i - k] * d[k];
        }
        if s == 0.0 || !s.is_finite() {
            return Err(Error::Eigen(format!("zero pivot in inertia count at row {i}")));
        }
        d[i] = s;
        if s < 0.0 {
            negatives += 1;
        }
    }
    Ok(negatives)
}

/// Negative and zero eigenvalue counts, the kernel direction, and the coercivity estimate
/// `min (f, Lf)/‖f‖²_{H¹}` over `f ⊥ {Q, ΛQ, yΛQ}`.
///
/// Counts and the kernel vector use the full assembled matrix (inertia and inverse
/// iteration). The constrained minimum is a dense generalized eigenproblem on
/// `[-20, 20]` at spacing `max(h, 1/16)`.
pub fn spectrum_summary(op: &LinearizedOperator) -> Result<SpectrumSummary> {
    let grid = op.grid;
    if !grid.contains(-20.0, 20.0) {
        return Err(Error::Domain("spectrum needs a grid containing [-20, 20]".into()));
    }
    let h = grid.spacing();
    let tau = 100.0 * libm::pow(h, 6.0);
    let pot = op.potential.values();
    let below_minus = count_below(&grid, pot, -tau)?;
    let below_plus = count_below(&grid, pot, tau)?;

    // inverse iteration at zero shift on the pivoted banded LU
    let lu = op.matrix.factor()?;
    let n = grid.len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * (i % 7) as f64).collect();
    let mut eigenvalue = 0.0;
    for _ in 0..6 {
        let mut w = lu.solve(&v);
        let norm = libm::sqrt(w.iter().map(|x| x * x).sum::<f64>());
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::Eigen("inverse iteration broke down".into()));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        let aw = op.matrix.matvec(&w);
        eigenvalue = w.iter().zip(&aw).map(|(a, b)| a * b).sum();
        v = w;
    }
    let qp = op.q_prime.values();
    let qn = libm::sqrt(qp.iter().map(|x| x * x).sum::<f64>());
    let corr = v.iter().zip(qp).map(|(a, b)| a * b).sum::<f64>().abs() / qn;

    let min_form = constrained_minimum(&grid)?;
    Ok(SpectrumSummary {
        n_negative: below_minus,
        kernel_dim: below_plus - below_minus,
        min_constrained_quadratic_form: min_form,
        kernel_eigenvalue: eigenvalue,
        kernel_correlation: corr,
        zero_threshold: tau,
    })
}

fn constrained_minimum(fine: &Grid) -> Result<f64> {
    let h = fine.spacing().max(1.0 / 16.0);
    let grid = Grid::line_with_spacing(-20.0, 20.0, h)?;
    let n = grid.len();
    let h = grid.spacing();
    let pot: Vec<f64> = (0..n)
        .map(|i| 5.0 * libm::pow(soliton::q(grid.point(i)), 4.0))
        .collect();
    let w = second_difference_weights(h);
    let band = |i: usize, j: usize| -> f64 {
        let k = j as isize - i as isize + HALF as isize;
        if (0..=2 * HALF as isize).contains(&k) {
            -w[k as usize]
        } else {
            0.0
        }
    };
    // quadratic forms with weight h: (f, Lf) and ‖f‖² + ‖f'‖²
    let a = DenseMatrix::from_fn(n, n, |i, j| h * (band(i, j) + if i == j { 1.0 - pot[i] } else { 0.0 }));
    let gram = DenseMatrix::from_fn(n, n, |i, j| h * (band(i, j) + if i == j { 1.0 } else { 0.0 }));
    let g = cholesky(&gram)?;

    // C = G⁻¹ A G⁻ᵀ via two triangular solves
    let lower_solve = |b: &mut [f64]| {
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= g[(i, k)] * b[k];
            }
            b[i] = s / g[(i, i)];
        }
    };
    let mut x = DenseMatrix::zeros(n, n); // G⁻¹A, row-major; build column by column
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| a[(i, j)]).collect();
        lower_solve(&mut col);
        for i in 0..n {
            x[(i, j)] = col[i];
        }
    }
    // C = (G⁻¹ (G⁻¹A)ᵀ)ᵀ ; A symmetric so (G⁻¹A)ᵀ = A G⁻ᵀ
    let xt = x.transpose();
    let mut c = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut col: Vec<f64> = (0..n).map(|i| xt[(i, j)]).collect();
        lower_solve(&mut col);
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    let c = DenseMatrix::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));

    // constraints in g-coordinates: z = G⁻¹(h v)
    let dirs: [fn(f64) -> f64; 3] = [soliton::q, soliton::lambda_q, |y| y * soliton::lambda_q(y)];
    let mut z: Vec<Vec<f64>> = Vec::new();
    for dir in dirs {
        let mut col: Vec<f64> = (0..n).map(|i| h * dir(grid.point(i))).collect();
        lower_solve(&mut col);
        // Gram-Schmidt against earlier constraints
        for prev in &z {
            let d: f64 = prev.iter().zip(&col).map(|(a, b)| a * b).sum();
            col.iter_mut().zip(prev).for_each(|(c, p)| *c -= d * p);
        }
        let norm = libm::sqrt(col.iter().map(|v| v * v).sum::<f64>());
        col.iter_mut().for_each(|v| *v /= norm);
        z.push(col);
    }
    // M = P C P + σ(I − P)
    let sigma = 1e6;
    let mut cz: Vec<Vec<f64>> = Vec::new();
    for zk in &z {
        cz.push(c.matvec(zk));
    }
    let zcz: Vec<Vec<f64>> = z
        .iter()
        .map(|zk| {
            cz.iter()
                .map(|cl| zk.iter().zip(cl).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let mut m = c.clone();
    for i in 0..n {
        for j in 0..n {
            let mut v = m[(i, j)];
            for (k, zk) in z.iter().enumerate() {
                v -= zk[i] * cz[k][j] + cz[k][i] * zk[j];
            }
            for (k, zk) in z.iter().enumerate() {
                for (l, zl) in z.iter().enumerate() {
                    v += zk[i] * zcz[k][l] * zl[j];
                }
                v += sigma * zk[i] * zk[j];
            }
            m[(i, j)] = v;
        }
    }
    let eig = symmetric_eigen(&m)?;
    Ok(eig.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::inner;

    fn op(h: f64) -> LinearizedOperator {
        LinearizedOperator::new(&Grid::line_with_spacing(-30.0, 30.0, h).unwrap()).unwrap()
    }

    #[test]
    fn kernel_and_scaling_identities() {
        let op = op(1.0 / 128.0);
        let g = *op.grid();
        let lqp = apply_l(&op, &g.sample(soliton::q_prime)).unwrap();
        assert!(lqp.max_abs() < 1e-5, "{}", lqp.max_abs());
        let llq = apply_l(&op, &g.sample(soliton::lambda_q)).unwrap();
        let err = llq.axpy(2.0, &g.sample(soliton::q)).unwrap().max_abs();
        assert!(err < 1e-5, "{err}");
        let lq = apply_l(&op, &g.sample(soliton::q)).unwrap();
        let err = lq
            .axpy(4.0, &g.sample(|y| libm::pow(soliton::q(y), 5.0)))
            .unwrap()
            .max_abs();
        assert!(err < 1e-5);
        let mkq = op.matrix().matvec(&g.sample(soliton::q_prime).into_values());
        assert!(mkq.iter().fold(0.0f64, |m, v| m.max(v.abs())) < 1e-5);
    }

    #[test]
    fn matrix_is_symmetric() {
        let op = op(1.0 / 16.0);
        let m = op.matrix();
        for i in 0..m.n() {
            for j in m.row_range(i) {
                assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn inverts_scaling_identity() {
        let op = op(1.0 / 64.0);
        let g = *op.grid();
        let f = solve_l(&op, &g.sample(|y| -2.0 * soliton::q(y))).unwrap();
        let err = f.axpy(-1.0, &g.sample(soliton::lambda_q)).unwrap().max_abs();
        assert!(err < 1e-5, "{err}");
        let z = solve_l(&op, &g.zeros()).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn rejects_unsolvable_data() {
        let op = op(1.0 / 32.0);
        let g = *op.grid();
        let r = solve_l(&op, &g.sample(soliton::q_prime));
        assert!(matches!(r, Err(Error::Solvability { .. })));
    }

    #[test]
    fn round_trip_on_constrained_subspace() {
        let op = op(1.0 / 64.0);
        let g = *op.grid();
        let qp = g.sample(soliton::q_prime);
        let raw = g.sample(|y| libm::exp(-(y - 1.0) * (y - 1.0)) * (1.0 + y));
        let c = inner(&raw, &qp).unwrap() / inner(&qp, &qp).unwrap();
        let f = raw.axpy(-c, &qp).unwrap();
        let lf = apply_l(&op, &f).unwrap();
        let back = solve_l(&op, &lf).unwrap();
        assert!(back.axpy(-1.0, &f).unwrap().max_abs() < 1e-5);
        assert!(inner(&back, &qp).unwrap().abs() < 1e-8 * crate::grid::l2_norm(&back));
    }

    #[test]
    fn spectrum_structure() {
        let op = LinearizedOperator::new(&Grid::line_with_spacing(-20.0, 20.0, 1.0 / 32.0).unwrap()).unwrap();
        let s = spectrum_summary(&op).unwrap();
        assert_eq!(s.n_negative, 1);
        assert_eq!(s.kernel_dim, 1, "{s:?}");
        assert!(s.kernel_correlation > 0.9999);
        assert!(s.min_constrained_quadratic_form > 0.0);
    }
}
