use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A parameter fell outside its admissible range.
    #[error("{param} = {value} is outside the admissible range {range}")]
    OutOfRange {
        param: &'static str,
        value: String,
        range: String,
    },

    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Horizon too short to observe what was asked for.
    #[error("insufficient horizon: {0}")]
    InsufficientHorizon(String),

    #[error("degenerate matrix product at step {step}: {reason}")]
    Degenerate { step: usize, reason: String },

    #[error("exact enumeration over {cylinders} cylinders exceeds the oracle limit {limit}; use the transfer method")]
    OracleScale { cylinders: u128, limit: u128 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn range(
        param: &'static str,
        value: impl ToString,
        range: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            param,
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// True for errors caused by a numeric parameter outside its domain.
    pub fn is_range_error(&self) -> bool {
        matches!(
            self,
            Error::OutOfRange { .. } | Error::OracleScale { .. } | Error::InsufficientHorizon(_)
        )
    }
}
