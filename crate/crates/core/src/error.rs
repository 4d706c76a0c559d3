// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors surfaced by every fallible operation in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PottsError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    /// The request is well formed but deliberately not served (e.g. an
    /// exhaustive search that would blow up combinatorially).
    #[error("refused: {0}")]
    Refused(String),
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("replicate with seed {seed} failed: {message}")]
    Replicate { seed: u64, message: String },
}

impl PottsError {
    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        Self::InvalidArgument(message.into())
    }
}

pub type Result<T> = std::result::Result<T, PottsError>;
