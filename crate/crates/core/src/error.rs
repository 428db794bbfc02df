use thiserror::Error;

/// Errors produced by the simulator, oracle, optimizers, and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitIndex { index: usize, num_qubits: usize },

    #[error("invalid gate: {0}")]
    InvalidGate(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
