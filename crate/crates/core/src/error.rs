use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Utilization is at or above one, so no steady state exists.
    #[error("unstable system: utilization {rho:.6} >= 1")]
    Unstable { rho: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    /// A configuration value violates one of its invariants.
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },

    #[error("cannot access {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }

    /// Whether the error comes from bad input files or configuration, as
    /// opposed to a failure while evaluating a valid configuration.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Validation(_) | Error::Parse { .. } | Error::Io { .. } | Error::Domain(_))
    }
}
