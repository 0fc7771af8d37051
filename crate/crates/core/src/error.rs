//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, integration, and post-processing.
#[derive(Debug, Error)]
pub enum Error {
    /// A model specification violates one of its invariants.
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A matrix argument has the wrong dimension.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// A reservoir label or index does not exist in the model.
    #[error("unknown reservoir `{0}`")]
    UnknownReservoir(String),

    /// The integrator produced NaN or infinite entries.
    #[error("integration produced non-finite values at t = {t}")]
    NonFinite { t: f64 },

    /// Limit-cycle detection failed within the available trace.
    #[error("limit cycle not reached: best residual {residual:.3e} at t1 = {t1}")]
    NotConverged { residual: f64, t1: f64 },

    /// The imaginary part of a nominally real observable is too large.
    #[error("imaginary residue {residue:.3e} exceeds tolerance {tol:.3e}")]
    ResidueViolation { residue: f64, tol: f64 },

    /// An interval lies outside the stored trace.
    #[error("interval [{a}, {b}] outside the stored trace")]
    OutOfRange { a: f64, b: f64 },

    /// A counting-window start lies outside the integration horizon.
    #[error("counting window start {0} outside the integration horizon")]
    WindowOutOfRange(f64),

    /// The requested Fock-space instance exceeds the hard mode cap.
    #[error("Fock space with {modes} modes exceeds the cap of {cap}")]
    FockTooLarge { modes: usize, cap: usize },

    /// A checkpoint file is malformed or inconsistent with the model.
    #[error("checkpoint: {0}")]
    Checkpoint(String),

    /// A characteristic function or distribution failed its normalization
    /// check.
    #[error("normalization violated by {0:.3e}")]
    NotNormalized(f64),

    /// Division by a near-zero average current.
    #[error("average current {0:.3e} too close to zero for a Fano factor")]
    VanishingCurrent(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
