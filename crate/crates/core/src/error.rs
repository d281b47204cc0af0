//! Error taxonomy shared by every module.
//!
//! Two families matter to callers: invalid input (parameters, domains,
//! shapes, fit windows) and numerical failure (singular or non-converged
//! linear algebra). The CLI maps the first family to exit code 1 and the
//! second to exit code 2.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or run parameter violates its documented constraint.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// A spatial coordinate lies outside the beam interval.
    #[error("position x = {x} outside the beam [0, {length}]")]
    OutOfDomain { x: f64, length: f64 },

    /// Vectors or matrices with incompatible sizes were combined.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A data window (fit range, sweep range) is empty or degenerate.
    #[error("empty window: {0}")]
    EmptyWindow(String),

    /// Data handed to a fitter is outside the fit's domain (for example
    /// non-positive energies under a log transform).
    #[error("fit domain: {0}")]
    FitDomain(String),

    /// The resolvent was requested within round-off of a spectrum point.
    #[error("near-singular resolvent at lambda = {lambda}")]
    NearSingular { lambda: f64 },

    /// Reading or writing a file failed.
    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    /// Dense linear algebra failed (singular solve, no convergence) or a
    /// configured solver cap was exceeded.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Convenience alias used across the crate.
pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for the input-validation family (CLI exit code 1), false for
    /// the numerical-failure family (CLI exit code 2).
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::NearSingular { .. })
    }
}
