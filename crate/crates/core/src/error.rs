use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("point {point:?} lies outside the chart domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },

    #[error("metric is singular at the evaluation point")]
    SingularMetric,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires dimension at least {required}, got {found}")]
    DimensionTooSmall { required: usize, found: usize },

    #[error("operation requires dimension {required}, got {found}")]
    DimensionRequired { required: usize, found: usize },

    #[error("derivative order {0} is not supported (1 or 2 only)")]
    UnsupportedOrder(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("sampler gave up after {attempts} attempts: {what}")]
    SamplingExhausted { what: String, attempts: usize },
}

impl Error {
    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name: name.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
