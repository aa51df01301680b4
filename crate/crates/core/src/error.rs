use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("dimension mismatch at row {row}: expected {expected} fields, found {found}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("malformed input at line {line}: {message}")]
    Malformed { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// Bracket search for a Luxemburg root did not terminate.
    #[error("bracket search exceeded {iterations} doublings without enclosing the root")]
    Overflow { iterations: usize },

    /// Analytic classification and numeric probe disagree.
    #[error("classification inconclusive: {0}")]
    Inconclusive(String),

    #[error("no finite embedding constant: {0}")]
    Unbounded(String),

    #[error(
        "schedule unreachable: m(1/N) = {m_floor:.6e} exceeds the level-1 target {target:.6e}"
    )]
    ScheduleUnreachable { m_floor: f64, target: f64 },

    #[error("delta {delta} is not representable on a grid with N = {grid_n}")]
    GridIncompatible { delta: f64, grid_n: usize },

    #[error("ensemble fingerprint {found} does not match schedule fingerprint {expected}")]
    FingerprintMismatch { expected: String, found: String },

    #[error(
        "covariance is not positive semidefinite (most negative eigenvalue {min_eigenvalue:.6e})"
    )]
    Factorization { min_eigenvalue: f64 },

    #[error(
        "epsilon {epsilon} needs resolution level {needed} but the schedule stops at n_max = {n_max}"
    )]
    ResolutionInsufficient {
        epsilon: f64,
        needed: usize,
        n_max: usize,
    },

    #[error("degenerate samples: {0}")]
    Degenerate(String),
}

impl Error {
    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Overflow { .. }
                | Error::Inconclusive(_)
                | Error::Unbounded(_)
                | Error::ScheduleUnreachable { .. }
                | Error::Factorization { .. }
                | Error::ResolutionInsufficient { .. }
        )
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
