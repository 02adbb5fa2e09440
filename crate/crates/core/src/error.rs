use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("columns are numerically rank deficient (smallest Gram eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    RankDeficient { min_eigenvalue: f64, tolerance: f64 },

    #[error("matrix is not symmetric: |a[{row}][{col}] - a[{col}][{row}]| = {deviation:e}")]
    NotSymmetric { row: usize, col: usize, deviation: f64 },

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("gaussian draw had near-zero norm after {attempts} attempts")]
    DegenerateDraw { attempts: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("need at least 2 subspaces, got {0}")]
    TooFewSubspaces(usize),

    #[error("invalid delta {value}: must lie in {range}")]
    InvalidDelta { value: f64, range: &'static str },

    #[error("invalid beta {value}: must lie in {range}")]
    InvalidBeta { value: f64, range: &'static str },

    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("subspace {index} is not orthonormal (max |U^T U - I| = {deviation:e})")]
    NotOrthonormal { index: usize, deviation: f64 },

    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("conservation check failed: sum of pair traces {pair_sum} vs trace(S^2) {trace_s2}")]
    ConservationViolated { pair_sum: f64, trace_s2: f64 },

    #[error("{failed} of {trials} trials failed (indices {indices:?}), more than 1% allowed")]
    TooManyFailedTrials {
        failed: usize,
        trials: usize,
        indices: Vec<u64>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short, stable name used in `error[Tag]` diagnostics and by the C API.
    pub fn tag(&self) -> &'static str {
        match self {
            Error::RankDeficient { .. } => "RankDeficient",
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DegenerateDraw { .. } => "DegenerateDraw",
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::TooFewSubspaces(_) => "TooFewSubspaces",
            Error::InvalidDelta { .. } => "InvalidDelta",
            Error::InvalidBeta { .. } => "InvalidBeta",
            Error::InvalidDims(_) => "InvalidDims",
            Error::ConfigInvalid(_) => "ConfigInvalid",
            Error::NotOrthonormal { .. } => "NotOrthonormal",
            Error::Malformed(_) => "Malformed",
            Error::ConservationViolated { .. } => "ConservationViolated",
            Error::TooManyFailedTrials { .. } => "TooManyFailedTrials",
            Error::Io(_) => "Io",
            Error::Json(_) => "Json",
            Error::Csv(_) => "Csv",
        }
    }

    /// Whether the error stems from bad user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::DimensionMismatch(_)
                | Error::TooFewSubspaces(_)
                | Error::InvalidDelta { .. }
                | Error::InvalidBeta { .. }
                | Error::InvalidDims(_)
                | Error::ConfigInvalid(_)
                | Error::NotOrthonormal { .. }
                | Error::Malformed(_)
                | Error::Json(_)
        )
    }
}
