use crate::timeseries::MonthDate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors returned by this crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A log transform met a value that is not strictly positive.
    #[error("series `{series}` has non-positive value {value} at {date}")]
    NonPositive {
        series: String,
        date: MonthDate,
        value: f64,
    },
    /// A series has zero sample variance where a positive one is required.
    #[error("degenerate series `{0}`: zero variance")]
    Degenerate(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// Series date ranges do not intersect.
    #[error("alignment failed: {0}")]
    Alignment(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    /// A cross-product or covariance matrix could not be factorised.
    #[error("singular matrix in {0}")]
    Singular(String),
    /// Likelihood maximisation did not converge.
    #[error("estimation failed: {message} (best log-likelihood {best_loglik})")]
    Estimation { message: String, best_loglik: f64 },
    /// A recursion or sampler left the numerically safe region.
    #[error("numerical divergence: {0}")]
    Divergence(String),
    #[error("parse error: {0}")]
    Parse(String),
    /// A named input file is missing or malformed.
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Coarse classification used by front ends to map errors onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad or missing input data.
    Data,
    /// Invalid request (bad parameters or options).
    Usage,
    /// Estimation or numerical failure.
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NonPositive { .. }
            | Error::Alignment(_)
            | Error::Parse(_)
            | Error::Input { .. }
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::InsufficientData(_) => ErrorKind::Data,
            Error::InvalidArgument(_) | Error::Dimension(_) => ErrorKind::Usage,
            Error::Degenerate(_)
            | Error::Singular(_)
            | Error::Estimation { .. }
            | Error::Divergence(_) => ErrorKind::Numerical,
        }
    }
}
