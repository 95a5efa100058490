use std::path::PathBuf;

use thiserror::Error;

/// Process exit code for a run whose checks all passed.
pub const EXIT_PASS: i32 = 0;
/// Some selected check failed, or the computation itself failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// The inputs were rejected before anything ran.
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("field alpha = {alpha} does not exceed p = {p}; pass --allow-hypothesis-violation to run anyway")]
    Hypothesis { alpha: f64, p: f64 },
    #[error(transparent)]
    Core(#[from] youngflow_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Self::Format { path: path.into(), message: message.to_string() }
    }

    /// Errors raised while validating inputs map to [`EXIT_INVALID`]; failures
    /// during a computation map to [`EXIT_CHECK_FAILED`].
    pub fn exit_code(&self) -> i32 {
        use youngflow_core::Error as E;
        match self {
            Self::Io { .. } | Self::Format { .. } | Self::Config(_) | Self::Hypothesis { .. } => EXIT_INVALID,
            Self::Core(
                E::NonConvergence { .. } | E::Divergence { .. } | E::Factorization | E::StencilOutsideBox { .. },
            ) => EXIT_CHECK_FAILED,
            Self::Core(_) => EXIT_INVALID,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
