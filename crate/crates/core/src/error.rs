//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors surfaced by the library.
///
/// `Internal` marks a violated invariant that the algorithms re-verify on
/// their own output; callers are never expected to see it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Error {
    /// Construction of a domain value violated one of its invariants.
    Invalid(String),
    /// Operands have incompatible shapes (dimension, place, target kind).
    Mismatch(String),
    /// A precondition of an operation does not hold for the given input.
    Precondition(String),
    /// A re-verified invariant failed on computed output.
    Internal(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }
    pub fn mismatch(msg: impl Into<String>) -> Self {
        Error::Mismatch(msg.into())
    }
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Invalid(m) => write!(f, "invalid value: {m}"),
            Error::Mismatch(m) => write!(f, "shape mismatch: {m}"),
            Error::Precondition(m) => write!(f, "precondition failed: {m}"),
            Error::Internal(m) => write!(f, "internal invariant violated: {m}"),
        }
    }
}

impl std::error::Error for Error {}
