use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} is outside [0, 1]")]
    LossOutOfRange { what: &'static str, value: f64 },

    #[error("no synthetic data for nonzero reliance (rho = {rho})")]
    NoSyntheticData { rho: f64 },

    #[error("observation {value} outside declared support [{lower}, {upper}]")]
    OutOfSupport { value: f64, lower: f64, upper: f64 },

    /// A wealth factor `1 - bet * (q - alpha)` went negative. This means the
    /// bet left its legal range and is a bug, never a user error.
    #[error("negative wealth factor {factor} (bet {bet}, observation {observation})")]
    NegativeFactor { factor: f64, bet: f64, observation: f64 },

    #[error("{path}: row {row}, column `{column}`: {message}")]
    Csv {
        path: PathBuf,
        row: usize,
        column: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    CsvWrite(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
