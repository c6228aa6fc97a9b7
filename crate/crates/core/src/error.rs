//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("tensor of {elements} elements exceeds the dense storage budget")]
    ResourceLimit { elements: u128 },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("rank-deficient normal equations at mode {mode}, row {row} (ridge = 0)")]
    RankDeficientRow { mode: usize, row: usize },

    #[error(
        "cptm ineligible: target day {target} is already missing at pixel ({row}, {col}) \
         covered by the source mask"
    )]
    CptmIneligible { target: usize, row: usize, col: usize },

    #[error("infeasible request: found {found} of {requested} valid cptm pairs within the attempt budget")]
    Infeasible { found: usize, requested: usize },

    #[error("variogram fit failed: {0}")]
    FitFailure(String),

    #[error("file format: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn dims(msg: impl Into<String>) -> Self {
        Error::DimensionMismatch(msg.into())
    }

    pub fn degenerate(msg: impl Into<String>) -> Self {
        Error::DegenerateInput(msg.into())
    }

    /// Process exit code used by the CLI: 2 validation, 3 numerical, 4 infeasibility.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Singular(_) | Error::RankDeficientRow { .. } | Error::FitFailure(_) => 3,
            Error::Infeasible { .. } => 4,
            _ => 2,
        }
    }
}
