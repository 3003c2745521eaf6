use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the Hartree laboratory.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension D = {0} is below the minimum of 3")]
    DimensionTooSmall(u32),

    #[error("exponent p = {p} outside the admissible interval ({lo}, {hi})")]
    ExponentOutOfRange { p: f64, lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: expected n = {expected_n}, L = {expected_l}; found n = {found_n}, L = {found_l}")]
    GridMismatch {
        expected_n: usize,
        expected_l: f64,
        found_n: usize,
        found_l: f64,
    },

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("bad magic in field file {0:?}")]
    BadMagic(PathBuf),

    #[error("truncated payload in {path:?}: expected {expected} bytes, found {found}")]
    TruncatedPayload {
        path: PathBuf,
        expected: usize,
        found: usize,
    },

    #[error("negative argument {0} to the sine integral")]
    NegativeArgument(f64),

    #[error("grid with n = {0} is too large for direct summation (n <= 16)")]
    GridTooLarge(usize),

    #[error("field is identically zero")]
    ZeroField,

    #[error("degenerate field: {0}")]
    DegenerateField(String),

    #[error("scaling parameter lambda = {0} must be positive")]
    NonpositiveLambda(f64),

    #[error("GN exponent q = {q} outside (0, {hi})")]
    QOutOfRange { q: f64, hi: f64 },

    #[error("mass m = {m} outside (0, {hi})")]
    MassOutOfRange { m: f64, hi: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("iteration collapsed: {0}")]
    Collapse(String),

    #[error("all {0} seeds failed to converge")]
    AllSeedsFailed(usize),

    #[error("no valid samples on the V = 0 manifold out of {0} candidates")]
    NoValidSamples(usize),

    #[error("non-finite state at t = {0}")]
    NonfiniteState(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
