use std::path::PathBuf;
use thiserror::Error;

/// Crate-wide error type.
///
/// The CLI maps these onto process exit codes: usage problems exit with 1,
/// data and structure problems with 2, resource limits with 3.
#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration or flag combination supplied by the caller.
    #[error("usage: {0}")]
    Usage(String),

    /// Filesystem failure, tagged with the path involved.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed CSV input.
    #[error("csv: {0}")]
    Csv(String),

    /// Input data violates a precondition (non-numeric cell, too few
    /// columns, out-of-range coordinates, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A cherry tree, cherry sequence, or vine matrix violates a structural
    /// invariant.
    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    /// The information estimator cannot run (too few rows after
    /// subsampling, k too large for the point set, ...).
    #[error("estimator: {0}")]
    Estimator(String),

    /// A grid would exceed the configured point budget.
    #[error(
        "grid for dimension {dim} needs {points} points (side {side}); budget is {budget}"
    )]
    GridBudget {
        dim: usize,
        side: usize,
        points: u128,
        budget: u64,
    },

    /// Deliberately unimplemented functionality.
    #[error("not supported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Exit code the CLI uses for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) => 1,
            Error::GridBudget { .. } => 3,
            _ => 2,
        }
    }
}
