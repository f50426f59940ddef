//! Crate-wide error type.

use std::path::PathBuf;

/// Errors surfaced by fallible operations across the crate.
///
/// Shape and configuration mistakes are reported through this type so that
/// callers driving the library from files or a CLI get a diagnostic instead
/// of a panic. Violations of internal invariants still panic.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input dimensions do not match what the operation requires.
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    /// A configuration value is out of range or inconsistent.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    /// Input data is rejected (wrong length, missing labels, non-finite values, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// Serialized data (checkpoint, CSV, config file) could not be parsed.
    #[error("malformed data: {0}")]
    Malformed(String),
    /// Requested preset does not exist.
    #[error("unknown preset `{0}` (expected fig4..fig11)")]
    UnknownPreset(String),
    /// An I/O operation failed; the offending path is part of the message.
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
