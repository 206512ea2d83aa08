//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    /// Bad argument or state supplied to a library call.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Scene file could not be loaded or failed validation.
    #[error("scene config: {0}")]
    Scene(String),

    /// Snapshot file violates the binary format contract.
    #[error("snapshot: {0}")]
    Snapshot(String),

    /// Diagnostics CSV could not be parsed or compared.
    #[error("diagnostics: {0}")]
    Diagnostics(String),

    /// A sweep produced a non-finite quantity; the driver wraps this with
    /// the offending step number.
    #[error("non-finite {what} for particle {index}")]
    NonFinite { what: String, index: usize },

    /// The simulation produced a non-finite quantity.
    #[error("numerical divergence at step {step}: {detail}")]
    Diverged { step: u64, detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
