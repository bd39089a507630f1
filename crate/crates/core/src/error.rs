use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the toolkit reports. The variants map one-to-one onto the
/// CLI exit codes (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// Bad parameters, missing inputs, mismatched vocabularies.
    #[error("configuration error: {0}")]
    Config(String),

    /// A value outside the mathematical domain of an operation
    /// (non-positive temperature, support violation, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Corrupt or inconsistent data: out-of-range token ids, non-finite
    /// logits, malformed files, records whose arrays disagree.
    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("training diverged at step {step}: loss = {loss}")]
    TrainingDiverged { step: usize, loss: f64 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn integrity(msg: impl Into<String>) -> Self {
        Error::Integrity(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 configuration, 3 integrity, 4 training divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Domain(_) | Error::Io { .. } => 2,
            Error::Integrity(_) => 3,
            Error::TrainingDiverged { .. } => 4,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Integrity(format!("json: {e}"))
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Integrity(format!("csv: {e}"))
    }
}
