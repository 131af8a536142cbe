//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("level {j} outside truncation range [{j_min}, -1] u [1, {j_max}]")]
    LevelOutOfRange { j: i32, j_min: i32, j_max: i32 },

    #[error("level 0 carries no annulus")]
    LevelZero,

    #[error(
        "cutoff budget violated on level {j}, interval {index}: eps {eps_lo} + {eps_hi} > length {len}"
    )]
    EpsilonBudget {
        j: i32,
        index: i32,
        eps_lo: f64,
        eps_hi: f64,
        len: f64,
    },

    #[error("cutoff radius must be positive, got {eps} at knot {knot} (level {j})")]
    EpsilonNonPositive { j: i32, knot: f64, eps: f64 },

    #[error("knot sequence must be strictly increasing near {at}")]
    KnotsNotIncreasing { at: f64 },

    #[error("cutoff collars overlap near {at}; the configuration is too tight for a shared grid")]
    CollarOverlap { at: f64 },

    #[error("grid is not adapted to the interval [{lo}, {hi}]: {reason}")]
    GridMismatch { lo: f64, hi: f64, reason: String },

    #[error("frequency grid under-resolves a ramp: step {step} > {limit} required for eps {eps}")]
    RampUnderResolved { step: f64, limit: f64, eps: f64 },

    #[error("bell margins exceed the expanded-rectangle budget: eps {eps} > {limit} for |I| = {len}")]
    ExpansionBudget { eps: f64, limit: f64, len: f64 },

    #[error("weight undefined at the origin")]
    WeightAtOrigin,

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("format: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
