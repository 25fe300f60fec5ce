//! Error type shared by all modules.

use thiserror::Error;

/// Errors surfaced by fallible operations.
///
/// The variants mirror the failure classes the CLI maps to exit codes:
/// invalid arguments (2), resource-guard violations (3), and everything
/// else (1).
#[derive(Debug, Error)]
pub enum FockcohError {
    /// Caller passed arguments outside an operation's documented domain.
    #[error("invalid arguments: {0}")]
    InvalidArguments(String),

    /// A computation would exceed a documented resource guard.
    #[error("resource limit: {0}")]
    ResourceLimit(String),

    /// A sector-conditional quantity was requested on an unoccupied sector.
    #[error("sector {sector} carries weight {weight:.3e}, below the occupancy floor")]
    UndefinedSector { sector: u64, weight: f64 },

    /// A rate formula is undefined for the given input (e.g. a one-dimensional
    /// target register).
    #[error("undefined rate: {0}")]
    UndefinedRate(String),

    /// The operation is only defined for pure states and received a mixed one.
    #[error("mixed states are not supported here: {0}")]
    MixedStateUnsupported(String),

    /// An internal invariant failed; indicates a bug, not a caller error.
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, FockcohError>;
