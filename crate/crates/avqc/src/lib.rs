//! Numerical analysis toolkit for arbitrarily varying quantum channels
//! (AVQCs) under simultaneous jamming and eavesdropping.
//!
//! The crate is organised around a dense complex-matrix substrate
//! ([`linalg`]) on top of which sit channel representations ([`channels`]),
//! entropic quantities ([`entropy`]), symmetrizability tests
//! ([`symmetrizability`]), finite-letter secrecy functionals ([`secrecy`]),
//! continuity bounds ([`continuity`]), finite-blocklength code scoring
//! ([`coding`]) and a catalog of built-in example families ([`catalog`]).
//!
//! All logarithms are base 2; every information quantity is in bits. All
//! public operations are pure functions on immutable values and safe to call
//! concurrently. Stochastic pieces (optimizer restarts, random probe states)
//! are driven by explicit seeds, so identical inputs and seeds reproduce
//! identical outputs.

use thiserror::Error;

pub mod catalog;
pub mod channels;
pub mod coding;
pub mod continuity;
pub mod entropy;
pub mod linalg;
pub mod opt;
pub mod random;
pub mod secrecy;
pub mod symmetrizability;

/// Errors shared by all toolkit modules.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error(
        "matrix is not Hermitian: deviation {deviation:.3e} exceeds tolerance {tolerance:.3e}"
    )]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("state must have trace within 1e-9 of 1, got {trace:.12}")]
    InvalidTrace { trace: f64 },

    #[error("not a probability distribution: {reason}")]
    InvalidDistribution { reason: String },

    #[error("blocklength too large: {n} exceeds limit {max}")]
    BlocklengthTooLarge { n: usize, max: usize },

    #[error("probe dimension mismatch: probes must live on dimension {expected}, got {got}")]
    ProbeDimensionMismatch { expected: usize, got: usize },

    #[error("symmetrizer rule not applicable: {reason}")]
    RuleNotApplicable { reason: String },

    #[error("argument out of range: {what} = {value}")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("shape mismatch: {reason}")]
    ShapeMismatch { reason: String },

    #[error("kraus operators do not sum to a trace-preserving channel: residual {residual:.3e}")]
    NotTracePreserving { residual: f64 },

    #[error("eigensolver failed to converge within {sweeps} sweeps (off-diagonal mass {off_diagonal:.3e})")]
    EigNotConverged { sweeps: usize, off_diagonal: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Whether the error indicates invalid caller input (as opposed to an
    /// internal numerical failure). Front ends map this to their exit codes.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::EigNotConverged { .. })
    }
}
