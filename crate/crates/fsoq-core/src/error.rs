//! Error type shared by all simulator modules.

use thiserror::Error;

/// Errors produced by scenario validation, sampling, and rate evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// The link model is only meaningful for zenith angles in [0°, 80°];
    /// beyond 80° the satellite drops below the usable orbit segment.
    #[error("zenith angle {got_deg:.3}° outside the validity range [0°, 80°]")]
    ZenithOutOfRange { got_deg: f64 },

    /// A length, rate, or scale parameter that must be strictly positive.
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },

    /// A probability-like parameter outside [0, 1].
    #[error("{name} = {value} outside [0, 1]")]
    ProbabilityRange { name: &'static str, value: f64 },

    /// The log-variable covariance could not be repaired into a valid
    /// (positive-semidefinite) matrix; carries the offending diagnostics.
    #[error("invalid beam covariance: {detail}")]
    CovarianceInvalid { detail: String },

    /// A checked quadrature whose order-doubling error estimate exceeded
    /// the requested tolerance. Reported, never silently accepted.
    #[error("quadrature error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e} ({context})")]
    QuadratureAccuracy {
        estimate: f64,
        tolerance: f64,
        context: String,
    },

    /// QBER is undefined when both the stray and signal expectations
    /// vanish — nothing arrives at the detector at all.
    #[error("no signal: stray and signal photon expectations are both zero")]
    NoSignal,

    /// An observation record of one protocol variant was fed into the
    /// estimator of the other.
    #[error("observation kind does not match the protocol variant (expected {expected})")]
    ProtocolMismatch { expected: &'static str },

    /// Monte-Carlo runs need at least one sample.
    #[error("sample count M must be >= 1")]
    EmptySampleCount,

    /// Histograms need at least two bins.
    #[error("bin count must be >= 2, got {got}")]
    BinCount { got: usize },

    /// Decoy-state intensities must be strictly ordered for the bounds
    /// to be well defined: mu1 > mu2 + mu3 and mu2 > mu3 >= 0.
    #[error("intensities must satisfy mu1 > mu2 + mu3 and mu2 > mu3 >= 0, got ({mu1}, {mu2}, {mu3})")]
    IntensityOrdering { mu1: f64, mu2: f64, mu3: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
