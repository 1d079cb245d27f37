use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    Geometry(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("parameter out of range: {0}")]
    Domain(String),

    #[error("budget exceeded for {what}: estimated {estimate:.3e}, limit {limit:.3e}")]
    Budget {
        what: String,
        estimate: f64,
        limit: f64,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
