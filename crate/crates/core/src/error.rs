use thiserror::Error;

/// Errors produced by the estimation, metric and experiment routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least 1")]
    InvalidDimension(usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("offset constant c_ell = {c_ell} is below the admissible bound max((c6 * c_h^d)^-1, 1) = {bound}")]
    OffsetConstantTooSmall { c_ell: f64, bound: f64 },

    #[error("rejection sampler exceeded {attempts} proposals while drawing {requested} points")]
    SamplingFailure { attempts: u64, requested: usize },

    #[error("grid with {requested} cells exceeds the cap of {cap} cells")]
    GridTooLarge { requested: u128, cap: usize },

    #[error("fit undefined: {0}")]
    UndefinedFit(String),

    #[error("construction infeasible: {0}")]
    Infeasible(String),

    #[error("unknown model id `{0}`")]
    UnknownModel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
