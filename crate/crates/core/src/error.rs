//! Crate-wide error type.

use thiserror::Error;

/// Errors shared by every module in the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An operation that needs a nonempty set was given an empty one.
    #[error("empty set")]
    EmptySet,

    /// Two objects that must live over the same space do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A dimension outside the supported range 1..=24.
    #[error("dimension {dim} out of supported range 1..={max}")]
    InvalidDimension { dim: u32, max: u32 },

    /// A Boolean-valued operation was handed a function with m != 1.
    #[error("operation requires a one-bit codomain (m = 1), got m = {m}")]
    NotBoolean { m: u32 },

    /// Exact enumeration would exceed the configured work budget.
    /// The message names the feasible maximum.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// The agreement set T = {x : f(x) = l(x) + c} is empty, so the
    /// covering argument cannot start.
    #[error("degenerate agreement: the agreement set is empty")]
    DegenerateAgreement,

    /// Generator parameters that cannot be realized.
    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    /// Malformed `.fn` / `.set` input.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
