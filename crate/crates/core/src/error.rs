//! Crate-wide error type.

use thiserror::Error;

/// Errors raised by loaders, featurizers, models, and the verification engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input data, pointing at the offending line or row.
    #[error("{path}: line {line}: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },

    /// Input that parsed but violates a documented invariant.
    #[error("invalid data: {0}")]
    Invalid(String),

    #[error("empty text")]
    EmptyText,

    /// Vectorizer or model configuration outside the accepted domain.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Training-time failures (degenerate labels, bad matrices).
    #[error("training error: {0}")]
    Train(String),

    /// Prediction-time failures (dimension mismatches).
    #[error("prediction error: {0}")]
    Predict(String),

    #[error("explanation error: {0}")]
    Explain(String),

    /// Price provider failures (missing series, transport errors).
    #[error("price provider: {0}")]
    Provider(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn malformed(
        path: impl Into<String>,
        line: usize,
        message: impl Into<String>,
    ) -> Self {
        Error::Malformed {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
