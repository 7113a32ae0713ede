use alloc::string::String;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("derivative order {order} exceeds the supported maximum {max}")]
    UnsupportedOrder { order: usize, max: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("solvability violated: |(h, Q')| = {pairing:.3e} exceeds {limit:.3e}")]
    Solvability { pairing: f64, limit: f64 },
    #[error("singular system: {0}")]
    Singular(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("profile construction failed: {0}")]
    Construction(String),
    #[error("Newton iteration did not converge after {iterations} steps (pairings {pairings:?})")]
    NonConvergence { iterations: usize, pairings: [f64; 3] },
    #[error("decomposition left the validity window: ||eps||_H1 = {norm:.3e} > {limit:.3e}")]
    OutOfWindow { norm: f64, limit: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("blow-up abort at t = {last_valid_time}: {reason}")]
    BlowUp { last_valid_time: f64, reason: String },
    #[error("insufficient data: {0}")]
    Insufficient(String),
}

pub type Result<T> = core::result::Result<T, Error>;
