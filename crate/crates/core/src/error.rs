use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("no records")]
    Empty,

    #[error("record {index}: non-finite or negative value in `{field}`")]
    NonFiniteValue { index: usize, field: &'static str },

    #[error("record {index}: status code {code} is not one of 0, 1, 2")]
    BadStatusCode { index: usize, code: i64 },

    #[error("record {index}: {found} covariates, expected {expected}")]
    InconsistentCovariateDim {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("at least one covariate is required")]
    NoCovariates,

    #[error("no uncensored (status 0) observation")]
    NoUncensoredEvents,

    #[error("truncation point {value} is infeasible: {reason}")]
    TruncationInfeasible { value: f64, reason: String },

    #[error("empty risk set at event time {0}; move the truncation point inward")]
    ZeroRiskSet(f64),

    #[error("current status record {0} has no event mass in its integration window")]
    DegenerateCurrentStatus(usize),

    #[error("hazard has no jump at the event time of record {0}")]
    MissingJumpAtEvent(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("{failed} of {total} bootstrap replicates failed")]
    BootstrapDegenerate { failed: usize, total: usize },

    #[error("{available} usable bootstrap replicates, at least {required} needed")]
    InsufficientReplicates { available: usize, required: usize },

    #[error("{path}: line {line}, column `{column}`: {message}")]
    Schema {
        path: String,
        line: u64,
        column: String,
        message: String,
    },

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("scenario: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
