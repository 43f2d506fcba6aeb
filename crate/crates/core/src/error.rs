//! Crate-wide error type.

use std::path::PathBuf;

/// Everything that can go wrong in the laboratory, grouped so callers
/// (in particular the command-line tool) can map failures to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument violated a documented precondition (out-of-range
    /// frequency, empty input, mismatched lengths, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A linear system stayed numerically singular even after the
    /// automatic diagonal-loading retry.
    #[error("matrix numerically singular (condition estimate {condition:.3e})")]
    Singular {
        /// Rough condition-number estimate from the failed factorization.
        condition: f64,
    },

    /// A run configuration (file or command-line flags) is invalid.
    #[error("config error: {0}")]
    Config(String),

    /// File I/O failed.
    #[error("i/o error on {}: {source}", path.display())]
    Io {
        /// File the operation was working on.
        path: PathBuf,
        /// Underlying OS error.
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Process exit code for the command-line tool: 2 for configuration
    /// or domain problems, 3 for numerical failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) => 2,
            Error::Singular { .. } => 3,
            Error::Io { .. } => 4,
        }
    }
}
