//! Finite-key BB-84 secret-key lengths and PDT-averaged rates.
//!
//! Two source models are covered:
//!
//! - **single photons** (SP): the key length of a block of n + k sifted
//!   detections (n key bits, k parameter-estimation bits) is
//!
//!   ```text
//!   l = ⌊ n(q − h₂(Q_tol + μ)) − f_EC·n·h₂(Q_obs) − log₂(2/(ε_sec² ε_cor)) ⌋
//!   μ = sqrt( (n+k)/(nk) · (k+1)/k · ln(2/ε_sec) )
//!   ```
//!
//!   aborting when the observed QBER exceeds the tolerance and yielding
//!   zero once Q_tol + μ reaches 1/2;
//!
//! - **weak coherent pulses** with two decoy intensities (WCP), whose
//!   vacuum/single-photon bounds and phase-error estimate live in
//!   [`decoy`].
//!
//! Key lengths never go negative: infeasible points clamp to zero and
//! carry a [`ZeroRateReason`] so sweeps can proceed past them while still
//! reporting why the key vanished.

pub mod average;
pub mod decoy;
pub mod observations;

pub use average::{optimize_rate, pdt_averaged_rate, rate_at_eta, BinRate, KeyRateResult};
pub use decoy::{
    photon_number_split_trial, two_decoy_bounds, wcp_key_length, DecoyBounds, DecoyOutcome,
};
pub use observations::{
    expected_observations, stochastic_observations, DetectionModel, Observations,
};

use crate::error::{Error, Result};
use crate::geometry::LinkDirection;
use serde::{Deserialize, Serialize};

/// Why a key length clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZeroRateReason {
    /// Nothing arrives: detection probability is zero.
    NoSignal,
    /// Observed QBER above the tolerated threshold (protocol aborts).
    AbortOnQber,
    /// The entropy bound is exhausted (h₂ argument at or past 1/2, or
    /// the penalties outweigh the raw key).
    EntropyExhausted,
    /// Decoy-state estimation produced an empty single-photon bound.
    DecoyBoundsCrossed,
    /// Phase-error upper bound reached 1/2.
    PhaseErrorSaturated,
    /// No searched parameter set produced a positive key.
    OptimizationStalled,
}

impl std::fmt::Display for ZeroRateReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let code = match self {
            Self::NoSignal => "no-signal",
            Self::AbortOnQber => "abort-on-qber",
            Self::EntropyExhausted => "entropy-exhausted",
            Self::DecoyBoundsCrossed => "decoy-bounds-crossed",
            Self::PhaseErrorSaturated => "phase-error-saturated",
            Self::OptimizationStalled => "optimization-stalled",
        };
        f.write_str(code)
    }
}

/// A clamped key length plus the reason it is zero, if it is.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyLength {
    /// Extractable secret bits for the block (≥ 0, floored).
    pub bits: f64,
    /// Present exactly when `bits == 0`.
    pub reason: Option<ZeroRateReason>,
}

impl KeyLength {
    pub fn zero(reason: ZeroRateReason) -> Self {
        Self {
            bits: 0.0,
            reason: Some(reason),
        }
    }
}

/// Source model and its protocol knobs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ProtocolVariant {
    /// Ideal single-photon source; symmetric 50/50 basis choice.
    SinglePhoton {
        /// Sifted detections spent on parameter estimation (k).
        pe_bits: f64,
        /// QBER abort threshold Q_tol.
        q_tol: f64,
    },
    /// Weak coherent pulses with two decoy intensities.
    DecoyWcp {
        /// Mean photon numbers (μ_signal, μ_decoy, μ_vacuum) with
        /// μ₁ > μ₂ + μ₃ and μ₂ > μ₃ ≥ 0.
        intensities: [f64; 3],
        /// Send probabilities per intensity, summing to 1.
        intensity_probs: [f64; 3],
        /// Probability q_x of the key-generation (X) basis.
        basis_prob: f64,
    },
}

/// Full protocol parameter set for one rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolParams {
    pub variant: ProtocolVariant,
    /// Sifted-detection block size the protocol accumulates before
    /// distilling a key (n + k for SP, X-basis detections for WCP).
    pub block_n: f64,
    /// Secrecy failure bound ε_sec.
    pub eps_sec: f64,
    /// Correctness failure bound ε_cor.
    pub eps_cor: f64,
    /// Preparation quality q ∈ (0, 1].
    pub q: f64,
    /// Error-correction inefficiency f_EC ≥ 1.
    pub f_ec: f64,
    /// Source repetition rate (Hz); converts per-pulse rates to bits/s.
    pub rep_rate: f64,
}

impl ProtocolParams {
    /// Single-photon defaults: a fifth of the block on parameter
    /// estimation (k/n = 1/4), Q_tol = 5%, ε = 1e−9, f_EC = 1.16,
    /// 10 MHz source.
    pub fn single_photon(block_n: f64) -> Self {
        Self {
            variant: ProtocolVariant::SinglePhoton {
                pe_bits: block_n / 5.0,
                q_tol: 0.05,
            },
            block_n,
            eps_sec: 1e-9,
            eps_cor: 1e-9,
            q: 1.0,
            f_ec: 1.16,
            rep_rate: 10e6,
        }
    }

    /// Two-decoy WCP defaults: μ = (0.5, 0.1, 1e−3), send probabilities
    /// (0.7, 0.2, 0.1), q_x = 0.9, ε = 1e−9, f_EC = 1.16, 1 GHz source.
    pub fn decoy_wcp(block_n: f64) -> Self {
        Self {
            variant: ProtocolVariant::DecoyWcp {
                intensities: [0.5, 0.1, 1e-3],
                intensity_probs: [0.7, 0.2, 0.1],
                basis_prob: 0.9,
            },
            block_n,
            eps_sec: 1e-9,
            eps_cor: 1e-9,
            q: 1.0,
            f_ec: 1.16,
            rep_rate: 1e9,
        }
    }

    /// Defaults with the direction-specific block size: down-links
    /// accumulate 10⁶ (SP) / 10⁸ (WCP) sifted detections, up-links an
    /// order of magnitude fewer.
    pub fn default_single_photon(direction: LinkDirection) -> Self {
        match direction {
            LinkDirection::Downlink => Self::single_photon(1e6),
            LinkDirection::Uplink => Self::single_photon(1e5),
        }
    }

    /// See [`Self::default_single_photon`].
    pub fn default_decoy_wcp(direction: LinkDirection) -> Self {
        match direction {
            LinkDirection::Downlink => Self::decoy_wcp(1e8),
            LinkDirection::Uplink => Self::decoy_wcp(1e7),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [("eps_sec", self.eps_sec), ("eps_cor", self.eps_cor)] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::ProbabilityRange { name, value });
            }
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(Error::ProbabilityRange {
                name: "preparation quality q",
                value: self.q,
            });
        }
        if self.f_ec < 1.0 {
            return Err(Error::NonPositive {
                name: "f_ec - 1",
                value: self.f_ec - 1.0,
            });
        }
        if self.block_n < 2.0 {
            return Err(Error::NonPositive {
                name: "block_n - 2",
                value: self.block_n - 2.0,
            });
        }
        if self.rep_rate <= 0.0 {
            return Err(Error::NonPositive {
                name: "rep_rate",
                value: self.rep_rate,
            });
        }
        match self.variant {
            ProtocolVariant::SinglePhoton { pe_bits, q_tol } => {
                if !(pe_bits >= 1.0 && pe_bits < self.block_n) {
                    return Err(Error::NonPositive {
                        name: "pe_bits (must leave room for key bits)",
                        value: pe_bits,
                    });
                }
                if !(0.0..0.5).contains(&q_tol) {
                    return Err(Error::ProbabilityRange {
                        name: "q_tol",
                        value: q_tol,
                    });
                }
            }
            ProtocolVariant::DecoyWcp {
                intensities: [mu1, mu2, mu3],
                intensity_probs,
                basis_prob,
            } => {
                if !(mu1 > mu2 + mu3 && mu2 > mu3 && mu3 >= 0.0) {
                    return Err(Error::IntensityOrdering { mu1, mu2, mu3 });
                }
                let total: f64 = intensity_probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 || intensity_probs.iter().any(|&p| p <= 0.0) {
                    return Err(Error::ProbabilityRange {
                        name: "intensity_probs sum",
                        value: total,
                    });
                }
                if !(basis_prob > 0.0 && basis_prob < 1.0) {
                    return Err(Error::ProbabilityRange {
                        name: "basis_prob",
                        value: basis_prob,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Binary entropy h₂(p) = −p log₂ p − (1−p) log₂(1−p), zero at both
/// endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Finite-statistics broadening of the QBER estimate:
/// μ = sqrt( (n+k)/(nk) · (k+1)/k · ln(2/ε_sec) ).
pub fn finite_key_mu(n: f64, k: f64, eps_sec: f64) -> f64 {
    ((n + k) / (n * k) * ((k + 1.0) / k) * (2.0 / eps_sec).ln()).sqrt()
}

/// Single-photon finite-key length for a block of n key bits and k
/// parameter-estimation bits.
///
/// Aborts (zero key, [`ZeroRateReason::AbortOnQber`]) when the observed
/// QBER exceeds `q_tol`; yields zero with
/// [`ZeroRateReason::EntropyExhausted`] when the broadened tolerance
/// reaches 1/2 or the penalties consume the raw key.
pub fn sp_key_length(
    n: f64,
    k: f64,
    q_tol: f64,
    q: f64,
    eps_sec: f64,
    eps_cor: f64,
    f_ec: f64,
    q_obs: f64,
) -> KeyLength {
    if q_obs > q_tol {
        return KeyLength::zero(ZeroRateReason::AbortOnQber);
    }
    let mu = finite_key_mu(n, k, eps_sec);
    if q_tol + mu >= 0.5 {
        return KeyLength::zero(ZeroRateReason::EntropyExhausted);
    }
    let alpha = (2.0 / (eps_sec * eps_sec * eps_cor)).log2();
    let bits = (n * (q - binary_entropy(q_tol + mu)) - f_ec * n * binary_entropy(q_obs) - alpha)
        .floor();
    if bits <= 0.0 {
        return KeyLength::zero(ZeroRateReason::EntropyExhausted);
    }
    KeyLength { bits, reason: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn binary_entropy_reference_points() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_relative_eq!(
            binary_entropy(0.11),
            0.499_915_958_164_528,
            max_relative = 1e-14
        );
        for p in [0.03, 0.2, 0.41] {
            assert_relative_eq!(
                binary_entropy(p),
                binary_entropy(1.0 - p),
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn finite_key_broadening_matches_reference() {
        let mu = finite_key_mu(1e6, 1e6, 1e-9);
        assert_relative_eq!(mu, 6.544_682_487_931_615e-3, max_relative = 1e-12);
        assert!((mu - 6.545e-3).abs() < 1e-6);
        // more parameter-estimation data tightens the broadening
        assert!(finite_key_mu(1e6, 2e6, 1e-9) < mu);
        assert!(finite_key_mu(1e6, 1e6, 1e-12) > mu, "tighter eps costs statistics");
    }

    #[test]
    fn sp_key_length_matches_frozen_reference() {
        // n = 8e5, k = 2e5, Q_tol = 5%, observed QBER from the night
        // down-link at eta = 0.1; frozen by an independent evaluation
        let l = sp_key_length(
            8e5,
            2e5,
            0.05,
            1.0,
            1e-9,
            1e-9,
            1.16,
            0.020_581_271_323_899_88,
        );
        assert!(l.reason.is_none());
        assert_abs_diff_eq!(l.bits, 398_720.0, epsilon = 2.0);
    }

    #[test]
    fn sp_key_length_asymptotics_reach_the_entropy_bound() {
        // at n = k = 1e12 the finite-size terms are negligible and l/n
        // approaches 1 - 2 h2(Q) for f_EC = 1, q = 1
        let q = 0.05;
        let l = sp_key_length(1e12, 1e12, q, 1.0, 1e-9, 1e-9, 1.0, q);
        let ratio = l.bits / 1e12;
        let shannon = 1.0 - 2.0 * binary_entropy(q);
        assert!(
            (ratio - shannon).abs() < 1e-3,
            "l/n = {ratio} vs Shannon-limit form {shannon}"
        );
    }

    #[test]
    fn sp_zero_outcomes_carry_their_reasons() {
        let abort = sp_key_length(8e5, 2e5, 0.05, 1.0, 1e-9, 1e-9, 1.16, 0.08);
        assert_eq!(abort.bits, 0.0);
        assert_eq!(abort.reason, Some(ZeroRateReason::AbortOnQber));

        // broadened tolerance at 1/2: no extractable entropy left
        let saturated = sp_key_length(1e6, 1e6, 0.494, 1.0, 1e-9, 1e-9, 1.16, 0.1);
        assert_eq!(saturated.reason, Some(ZeroRateReason::EntropyExhausted));

        // tiny block: penalties alone eat the key
        let starved = sp_key_length(40.0, 10.0, 0.05, 1.0, 1e-9, 1e-9, 1.16, 0.02);
        assert_eq!(starved.reason, Some(ZeroRateReason::EntropyExhausted));
    }

    #[test]
    fn sp_key_length_is_monotone_in_qber_and_security() {
        let at = |q_obs: f64| sp_key_length(8e5, 2e5, 0.11, 1.0, 1e-9, 1e-9, 1.16, q_obs).bits;
        let mut prev = f64::INFINITY;
        for i in 0..8 {
            let bits = at(0.01 + i as f64 * 0.01);
            assert!(bits < prev, "key must shrink as QBER grows");
            prev = bits;
        }
        let loose = sp_key_length(8e5, 2e5, 0.05, 1.0, 1e-6, 1e-9, 1.16, 0.02).bits;
        let tight = sp_key_length(8e5, 2e5, 0.05, 1.0, 1e-12, 1e-9, 1.16, 0.02).bits;
        assert!(tight < loose, "tighter eps_sec must cost key bits");
    }

    #[test]
    fn zero_reason_codes_render_as_kebab_case() {
        assert_eq!(ZeroRateReason::AbortOnQber.to_string(), "abort-on-qber");
        assert_eq!(ZeroRateReason::NoSignal.to_string(), "no-signal");
        assert_eq!(
            ZeroRateReason::DecoyBoundsCrossed.to_string(),
            "decoy-bounds-crossed"
        );
        assert_eq!(
            ZeroRateReason::PhaseErrorSaturated.to_string(),
            "phase-error-saturated"
        );
        assert_eq!(
            ZeroRateReason::OptimizationStalled.to_string(),
            "optimization-stalled"
        );
        assert_eq!(
            ZeroRateReason::EntropyExhausted.to_string(),
            "entropy-exhausted"
        );
    }

    #[test]
    fn params_validation_enforces_ranges() {
        let sp = ProtocolParams::single_photon(1e6);
        sp.validate().unwrap();
        let wcp = ProtocolParams::decoy_wcp(1e8);
        wcp.validate().unwrap();

        let mut bad = sp;
        bad.q = 0.0;
        assert!(bad.validate().is_err());
        let mut bad = sp;
        bad.f_ec = 0.9;
        assert!(bad.validate().is_err());
        let mut bad = wcp;
        if let ProtocolVariant::DecoyWcp { intensities, .. } = &mut bad.variant {
            *intensities = [0.1, 0.5, 1e-3];
        }
        assert!(
            matches!(bad.validate(), Err(Error::IntensityOrdering { .. })),
            "signal intensity must dominate"
        );
        let mut bad = wcp;
        if let ProtocolVariant::DecoyWcp {
            intensity_probs, ..
        } = &mut bad.variant
        {
            *intensity_probs = [0.7, 0.2, 0.2];
        }
        assert!(bad.validate().is_err(), "send probabilities must sum to 1");
    }

    #[test]
    fn direction_defaults_scale_the_block_size() {
        assert_eq!(
            ProtocolParams::default_single_photon(LinkDirection::Downlink).block_n,
            1e6
        );
        assert_eq!(
            ProtocolParams::default_single_photon(LinkDirection::Uplink).block_n,
            1e5
        );
        assert_eq!(
            ProtocolParams::default_decoy_wcp(LinkDirection::Downlink).block_n,
            1e8
        );
        assert_eq!(
            ProtocolParams::default_decoy_wcp(LinkDirection::Uplink).block_n,
            1e7
        );
    }
}
