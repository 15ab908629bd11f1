//! Error types shared across the crate.

use thiserror::Error;

/// Coarse failure class, used by callers (e.g. the CLI) to map errors onto
/// exit codes: validation and hypothesis failures are recoverable input
/// problems, numeric failures mean a computation could not meet its budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("tensor order mismatch: expected {expected}, got {got}")]
    OrderMismatch { expected: usize, got: usize },

    #[error("invalid multi-index: {reason}")]
    InvalidMultiIndex { reason: String },

    #[error("non-finite value in {context}")]
    NonFinite { context: &'static str },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("direction vector must be nonzero")]
    ZeroDirection,

    #[error(
        "operation would produce kernels of order {required}, above the cap {max_order}; \
         raise the cap or use an explicitly truncating variant"
    )]
    MaxOrderExceeded { required: usize, max_order: usize },

    #[error("truncation budget exceeded: estimated dropped tail {tail:.3e} > budget {budget:.3e}")]
    TruncationBudget { tail: f64, budget: f64 },

    #[error("not a density: total mass {mass} differs from 1 by more than {tol:.1e}")]
    NotADensity { mass: f64, tol: f64 },

    #[error("density is negative: value {value:.6e} at a checked point (tolerance {tol:.1e})")]
    NegativeDensity { value: f64, tol: f64 },

    #[error("density has not been validated; run the density check first")]
    NotValidated,

    #[error("hypothesis failed: mean is not zero (|f1| = {norm:.3e}, tolerance {tol:.1e})")]
    MeanNotZero { norm: f64, tol: f64 },

    #[error(
        "hypothesis failed: covariance deficiency is not rank-one \
         (second kernel is not -(1/2) g^(x)2: {detail})"
    )]
    DeficiencyNotRankOne { detail: String },

    #[error(
        "hypothesis failed: |g| = {norm:.6} is not below the admissible cap {cap:.6}; \
         the identity-minus-projection form would not be a covariance"
    )]
    DirectionNormTooLarge { norm: f64, cap: f64 },

    #[error(
        "|g| = {norm:.6} exceeds the positivity threshold c* = {max:.6}; \
         the quartic representation attains negative values (its discriminant \
         argument only guarantees non-negativity below c*)"
    )]
    PositivityThreshold { norm: f64, max: f64 },

    #[error("rejection envelope estimation failed: {reason}")]
    EnvelopeFailure { reason: String },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::TruncationBudget { .. } | Error::EnvelopeFailure { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
