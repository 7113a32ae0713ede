//! Small linear-algebra kernels: banded LU with partial pivoting, dense
//! Householder least squares, Cholesky and a symmetric eigensolver.

mod banded;
mod dense;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::{cholesky, determinant, least_squares, solve_dense, symmetric_eigen, DenseMatrix, SymmetricEigen};
