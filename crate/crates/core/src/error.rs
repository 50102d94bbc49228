use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands have incompatible shapes (vector lengths, matrix dims).
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter is outside its legal range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The request would exceed an explicit enumeration bound.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// An input could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),

    /// A structural invariant of an input object does not hold.
    #[error("invalid instance: {0}")]
    Invalid(String),

    /// The LPN-to-flats reduction cannot proceed on this input.
    #[error("reduction failed: {0}")]
    Reduction(String),
}
