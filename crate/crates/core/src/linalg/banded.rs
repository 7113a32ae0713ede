use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Square banded matrix with `kl` sub-diagonals and `ku` super-diagonals.
///
/// Each row is stored as a window of absolute columns `[i - kl, i + ku + kl]`; the extra
/// `kl` columns on the right receive fill-in during pivoted factorization.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        BandedMatrix {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let offset = j as isize - i as isize + self.kl as isize;
        if offset < 0 || offset as usize >= self.width || j >= self.n {
            None
        } else {
            Some(i * self.width + offset as usize)
        }
    }

    /// Entry `(i, j)`; zero outside the stored band.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Sets entry `(i, j)`. Panics if `(i, j)` lies outside `[-kl, ku]`.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let ok = j + self.kl >= i && j <= i + self.ku;
        assert!(ok && j < self.n, "entry ({i}, {j}) outside the band");
        let s = self.slot(i, j).unwrap();
        self.data[s] = value;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let current = self.get(i, j);
        self.set(i, j, current + value);
    }

    /// Replaces row `i` by the `i`-th unit row.
    pub fn set_identity_row(&mut self, i: usize) {
        let lo = i.saturating_sub(self.kl);
        let hi = (i + self.ku).min(self.n - 1);
        for j in lo..=hi {
            self.set(i, j, 0.0);
        }
        self.set(i, i, 1.0);
    }

    pub fn row_range(&self, i: usize) -> core::ops::RangeInclusive<usize> {
        i.saturating_sub(self.kl)..=(i + self.ku).min(self.n - 1)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| self.row_range(i).map(|j| self.get(i, j) * x[j]).sum())
            .collect()
    }

    /// LU factorization with partial pivoting (row interchanges restricted to the band).
    pub fn factor(&self) -> Result<BandedLu> {
        let mut a = self.clone();
        let n = a.n;
        let kl = a.kl;
        let reach = a.ku + a.kl;
        let scale = a.data.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut pivots = vec![0usize; n];
        for k in 0..n {
            let last = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = a.get(k, k).abs();
            for r in k + 1..=last {
                let v = a.get(r, k).abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= scale * 1e-300 || best == 0.0 {
                return Err(Error::Singular(alloc::format!("zero pivot at column {k}")));
            }
            pivots[k] = p;
            let col_end = (k + reach).min(n - 1);
            if p != k {
                for j in k..=col_end {
                    let sk = a.slot(k, j).unwrap();
                    let sp = a.slot(p, j).unwrap();
                    a.data.swap(sk, sp);
                }
            }
            let pivot = a.get(k, k);
            for r in k + 1..=last {
                let sr = a.slot(r, k).unwrap();
                let factor = a.data[sr] / pivot;
                a.data[sr] = factor;
                if factor != 0.0 {
                    for j in k + 1..=col_end {
                        let ukj = a.data[a.slot(k, j).unwrap()];
                        if ukj != 0.0 {
                            let s = a.slot(r, j).unwrap();
                            a.data[s] -= factor * ukj;
                        }
                    }
                }
            }
        }
        Ok(BandedLu { lu: a, pivots })
    }
}

/// Factorization produced by [`BandedMatrix::factor`].
#[derive(Debug, Clone)]
pub struct BandedLu {
    lu: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn n(&self) -> usize {
        self.lu.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x);
        x
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let a = &self.lu;
        let n = a.n;
        assert_eq!(x.len(), n);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..=(k + a.kl).min(n - 1) {
                    x[r] -= a.data[a.slot(r, k).unwrap()] * xk;
                }
            }
        }
        let reach = a.ku + a.kl;
        for k in (0..n).rev() {
            let mut s = x[k];
            for j in k + 1..=(k + reach).min(n - 1) {
                s -= a.data[a.slot(k, j).unwrap()] * x[j];
            }
            x[k] = s / a.data[a.slot(k, k).unwrap()];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, kl: usize, ku: usize) -> BandedMatrix {
        let mut m = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in m.row_range(i) {
                let v = libm::sin((3 * i + 7 * j) as f64) + if i == j { 0.1 } else { 0.0 };
                m.set(i, j, v);
            }
        }
        m
    }

    #[test]
    fn solves_nonsymmetric_banded_system_with_pivoting() {
        let m = sample(40, 3, 2);
        let x_true: Vec<f64> = (0..40).map(|i| libm::cos(i as f64)).collect();
        let b = m.matvec(&x_true);
        let x = m.factor().unwrap().solve(&b);
        for (a, e) in x.iter().zip(&x_true) {
            assert!((a - e).abs() < 1e-9, "{a} vs {e}");
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        let m = BandedMatrix::zeros(5, 1, 1);
        assert!(matches!(m.factor(), Err(Error::Singular(_))));
    }

    #[test]
    fn identity_row_replacement() {
        let mut m = sample(10, 2, 2);
        m.set_identity_row(4);
        for j in 0..10 {
            assert_eq!(m.get(4, j), if j == 4 { 1.0 } else { 0.0 });
        }
    }
}
