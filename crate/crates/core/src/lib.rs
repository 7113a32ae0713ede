//! Numerical toolkit for minimal-mass blow-up of the quintic (mass-critical)
//! generalized Korteweg–de Vries equation
//!
//! ```text
//! u_t + (u_xx + u^5)_x = 0.
//! ```
//!
//! The crate is `no_std` and only needs `alloc`. It covers:
//!
//! * [`grid`]: uniform grids, high-order differentiation, quadrature and weighted norms;
//! * [`soliton`]: the ground state `Q`, its constants, mass/energy functionals;
//! * [`linearized`]: the operator `L = -d²/dy² + 1 - 5Q⁴` (apply, constrained solve, spectrum);
//! * [`profiles`]: the recursive profiles `P_k`, coefficients `β_k`, localized profiles `Q_b`
//!   and their residual `Ψ_b`;
//! * [`modulation`]: decomposition `u = λ^{-1/2}(Q_b + ε)((x - x̄)/λ)` and its diagnostics;
//! * [`evolver`]: integrating-factor RK4 pseudo-spectral time stepping and the bootstrap data;
//! * [`asymptotics`]: parameter fits, time-profile residuals, tail and integral laws.
//!
//! IO, configuration and the command-line driver live in the companion `gkdv` crate.
#![no_std]
#![forbid(unsafe_code)]
#![allow(
    clippy::neg_cmp_op_on_partial_ord,
    clippy::needless_range_loop,
    clippy::len_without_is_empty,
    clippy::wrong_self_convention
)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod asymptotics;
pub mod error;
pub mod evolver;
pub mod fft;
pub mod fit;
pub mod grid;
pub mod linalg;
pub mod linearized;
pub mod modulation;
pub mod profiles;
pub mod soliton;

pub use error::{Error, Result};
pub use grid::{Grid, GridFunction, Topology};
