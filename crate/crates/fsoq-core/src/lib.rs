//! Simulator for satellite free-space optical quantum links.
//!
//! The crate models the fading channel between a ground station and a
//! satellite as an atmosphere-distorted elliptic Gaussian beam hitting a
//! circular receiver aperture, and feeds the resulting transmittance
//! statistics into finite-key BB-84 secret-key-rate estimates.
//!
//! The pipeline, module by module:
//!
//! 1. [`geometry`] — slant-path length, atmospheric extinction, and the
//!    turbulence strength (C_n², refractive structure) per scenario and
//!    weather condition;
//! 2. [`beam`] — first and second moments of the beam-spot ellipse
//!    (centroid wander, spot widths, width correlations) and the
//!    lognormal/Gaussian distribution matched to them;
//! 3. [`transmittance`] — the aperture-clipping integral mapping one
//!    beam realization to a transmittance η ∈ [0, χ_ext];
//! 4. [`pdt`] — Monte-Carlo reconstruction of the probability
//!    distribution of transmittance (PDT) as a histogram over [0, 1];
//! 5. [`noise`] — stray-photon expectations for night/day skies and the
//!    QBER they induce;
//! 6. [`rates`] — finite-key secret-key lengths for single-photon and
//!    two-decoy WCP BB-84, averaged over the PDT, with protocol
//!    parameter optimization.
//!
//! Everything is deterministic for a fixed seed, including across
//! thread-count changes: samples are drawn on per-index RNG streams and
//! reduced in index order.

pub mod beam;
pub mod error;
pub mod geometry;
pub mod noise;
pub mod pdt;
pub mod quadrature;
pub mod rates;
pub mod transmittance;

pub use beam::{
    beam_moments, build_distribution, lognormal_match, rytov_variance, BeamMoments, BeamSample,
    EllipticBeamDistribution,
};
pub use error::{Error, Result};
pub use geometry::{
    Focus, LinkDirection, LinkScenario, SlantGeometry, WeatherCondition, DEFAULT_WAVELENGTH,
    MAX_ZENITH,
};
pub use noise::{photon_energy, qber, NoiseEnvironment};
pub use pdt::{
    sample_pdt, sample_pdt_checked, scenario_pdt, sweep_mean_transmittance, SweepPoint,
    TransmittanceDistribution,
};
pub use rates::{
    expected_observations, finite_key_mu, optimize_rate, pdt_averaged_rate, rate_at_eta,
    sp_key_length, stochastic_observations, two_decoy_bounds, wcp_key_length, BinRate,
    DetectionModel, KeyLength, KeyRateResult, Observations, ProtocolParams, ProtocolVariant,
    ZeroRateReason,
};
pub use transmittance::{
    analytic_centered, aperture_transmittance, aperture_transmittance_checked, ApertureSpec,
    CheckedTransmittance,
};
