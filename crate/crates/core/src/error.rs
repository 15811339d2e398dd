use thiserror::Error;

/// Errors produced by the estimation and simulation routines.
#[derive(Debug, Error)]
pub enum RfmError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grids differ between functional objects")]
    GridMismatch,
    #[error("candidate kinds differ or do not match the norm")]
    KindMismatch,
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("matrix is not symmetric (max relative asymmetry {0:e})")]
    NotSymmetric(f64),
    #[error("scatter matrix is singular or ill-conditioned (condition number {0:e})")]
    Singular(f64),
    #[error("not enough data: {0}")]
    InsufficientData(String),
    #[error("label {label} out of range 0..={k}")]
    LabelOutOfRange { label: usize, k: usize },
    #[error("subsample {index}: {source}")]
    Subsample {
        index: usize,
        #[source]
        source: Box<RfmError>,
    },
    #[error("malformed input at line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl RfmError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        RfmError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, RfmError>;
