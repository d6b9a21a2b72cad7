//! Library side of the `thermodiff` binary.
//!
//! Everything the binary does is reachable from here so integration
//! tests (and the acceptance suite) can drive commands without spawning
//! processes.

pub mod acceptance;
pub mod artifact;
pub mod commands;
pub mod config;

use thiserror::Error;

/// Process-level failure classes, mapped onto exit codes: usage errors
/// exit 2, computation failures exit 1.
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Computation(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Computation(_) => 1,
        }
    }
}
