//! Orthonormal bi-variate brushlet bases on structured coverings of the
//! frequency plane.
//!
//! The crate builds a covering of the plane minus the origin out of
//! rectangular annuli whose knots follow a power law tuned by a parameter
//! `alpha`, equips each rectangle with a tensor local-cosine (brushlet)
//! basis, and provides the analysis/synthesis transforms, the adapted
//! sequence-space and multiplier norms, nonlinear m-term approximation, and
//! the maximal-function diagnostics used to verify the construction.

pub mod approx;
pub mod bells;
pub mod brushlet1d;
pub mod brushlet2d;
pub mod covering;
pub mod error;
pub mod fft;
pub mod formats;
pub mod grid;
pub mod maximal;
pub mod signals;
pub mod spaces;
pub mod validate;

pub use error::{Error, Result};
