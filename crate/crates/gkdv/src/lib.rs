//! Driver for the `gkdv-core` toolkit: a `realfft` backend for the evolver, file formats,
//! run configuration, the staged pipeline with its acceptance checks, and the `gkdv` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checks;
pub mod config;
pub mod error;
pub mod fft;
pub mod io;
pub mod pipeline;
pub mod report;

pub use error::{CliError, CliResult};
pub use gkdv_core as core;
