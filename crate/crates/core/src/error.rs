use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("circuit of {width} qubits exceeds the {engine} cap of {cap} qubits")]
    TooManyQubits {
        engine: &'static str,
        width: usize,
        cap: usize,
    },

    #[error("qubit {qubit} out of range for width {width}")]
    QubitOutOfRange { qubit: usize, width: usize },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("channel is not trace preserving (deviation {deviation:.3e})")]
    NotCptp { deviation: f64 },

    #[error("calibration field `{field}`: {message}")]
    Calibration { field: String, message: String },

    #[error("config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("no convergence after {steps} steps (last change {last_change:.3e})")]
    NoConvergence { steps: usize, last_change: f64 },

    #[error("disconnected coupling map: {0}")]
    Disconnected(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn calibration(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Calibration {
            field: field.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
