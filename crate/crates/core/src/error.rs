use alloc::string::String;

/// Errors raised by path construction, integration, solving and sampling.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("interval [{s}, {t}] is outside the path domain [{start}, {end}]")]
    IntervalOutOfRange { s: f64, t: f64, start: f64, end: f64 },
    #[error("variation exponent must be >= 1, got {0}")]
    InvalidExponent(f64),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("non-finite input")]
    NonFinite,
    #[error("operation not supported for cadlag paths: {0}")]
    CadlagUnsupported(&'static str),
    #[error("concatenation failed: {0}")]
    Concat(String),
    #[error("integrand and integrator both jump at t = {0}")]
    CommonDiscontinuity(f64),
    #[error("Young pairing requires 1/p + 1/q > 1, got p = {p}, q = {q}")]
    ExponentPair { p: f64, q: f64 },
    #[error("field regularity alpha = {alpha} does not exceed driver exponent p = {p}")]
    Hypothesis { alpha: f64, p: f64 },
    #[error("Picard iteration did not converge on a single-cell window at t = {time} (last increment {residual:e})")]
    NonConvergence { time: f64, residual: f64 },
    #[error("Picard iterates diverged near t = {time}")]
    Divergence { time: f64 },
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("declared jump at index {0} has zero magnitude")]
    ZeroJump(usize),
    #[error("covariance factorization failed (grid is numerically not positive definite)")]
    Factorization,
    #[error("infinite expected jump count: truncation level must be positive")]
    InfiniteActivity,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("finite-difference stencil around anchor {anchor} leaves the declared box")]
    StencilOutsideBox { anchor: usize },
    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),
    #[error("derivative of this field is not available")]
    NoGradient,
}

pub type Result<T> = core::result::Result<T, Error>;
