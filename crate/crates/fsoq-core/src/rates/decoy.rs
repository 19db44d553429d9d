//! Two-decoy finite-key estimation chain for WCP BB-84.
//!
//! From the sifted and error counts per intensity the chain derives
//! concentration-bound estimates of the vacuum and single-photon
//! contributions to the key basis and of the single-photon phase-error
//! rate, then assembles the secret-key length:
//!
//! ```text
//! l = ⌊ s_X0 + s_X1 (1 − h₂(φ_X)) − f_EC·n_X·h₂(E_X)
//!       − 6 log₂(21/ε_sec) − log₂(2/ε_cor) ⌋
//! ```
//!
//! Every deviation term uses the total count of its own basis and kind
//! (X counts, Z counts, Z error counts), each inequality consuming an
//! ε_sec/21 share of the failure budget — hence the factor 21 and the
//! six ε_sec-level penalty terms in the length bound. All of these
//! security constants live in this module and nowhere else.
//!
//! Infeasible estimates clamp the key to zero with a reason code instead
//! of going negative: crossed decoy bounds (empty single-photon yield),
//! a saturated phase-error bound (φ_X ≥ 1/2), or exhausted entropy.

use crate::error::{Error, Result};
use crate::rates::observations::Observations;
use crate::rates::{binary_entropy, KeyLength, ProtocolParams, ProtocolVariant, ZeroRateReason};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Union-bound factor: the estimation chain applies nine concentration
/// inequalities plus the secrecy smoothing terms, each at ε_sec/21.
const UNION_BOUND_FACTOR: f64 = 21.0;
/// Number of ε_sec-level penalty terms carried into the length bound.
const SECRECY_TERM_COUNT: f64 = 6.0;
/// Correctness-hash failure budget factor (ε_cor/2 per comparison).
const CORRECTNESS_FACTOR: f64 = 2.0;

/// Finite-key bounds extracted from one observation record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecoyBounds {
    /// Lower bound on vacuum-pulse detections in the key basis.
    pub s_x0: f64,
    /// Lower bound on single-photon detections in the key basis.
    pub s_x1: f64,
    /// Lower bound on single-photon detections in the test basis.
    pub s_z1: f64,
    /// Upper bound on single-photon errors in the test basis.
    pub v_z1: f64,
    /// Upper bound on the single-photon phase-error rate.
    pub phi_x: f64,
}

/// Result of the estimation chain: usable bounds, or the reason the key
/// clamps to zero before the length formula is even reached.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DecoyOutcome {
    Bounds(DecoyBounds),
    Zero(ZeroRateReason),
}

/// Mixture weight τ_n = Σ_k p_k e^(−μ_k) μ_k^n / n! — the probability
/// that a sent pulse carries exactly n photons.
fn photon_number_weight(n: u32, intensities: &[f64; 3], probs: &[f64; 3]) -> f64 {
    let factorial: f64 = (1..=n).map(f64::from).product();
    probs
        .iter()
        .zip(intensities)
        .map(|(p, mu)| p * (-mu).exp() * mu.powi(n as i32) / factorial)
        .sum()
}

/// Finite-size deviation added to / subtracted from raw counts whose
/// basis-wide total is `total`.
fn count_deviation(total: f64, eps_sec: f64) -> f64 {
    if total <= 0.0 {
        0.0
    } else {
        (total / 2.0 * (UNION_BOUND_FACTOR / eps_sec).ln()).sqrt()
    }
}

/// Upper/lower estimates of the Poisson-weighted counts per intensity:
/// n±_k = (e^(μ_k)/p_k)(n_k ± δ), with the lower estimate floored at 0.
fn weighted_estimates(
    counts: &[f64; 3],
    total: f64,
    intensities: &[f64; 3],
    probs: &[f64; 3],
    eps_sec: f64,
) -> ([f64; 3], [f64; 3]) {
    let delta = count_deviation(total, eps_sec);
    let mut upper = [0.0; 3];
    let mut lower = [0.0; 3];
    for k in 0..3 {
        let scale = intensities[k].exp() / probs[k];
        upper[k] = scale * (counts[k] + delta);
        lower[k] = scale * (counts[k] - delta).max(0.0);
    }
    (upper, lower)
}

/// Vacuum and single-photon lower bounds for one basis.
fn yield_bounds(
    counts: &[f64; 3],
    total: f64,
    intensities: &[f64; 3],
    probs: &[f64; 3],
    eps_sec: f64,
) -> (f64, f64) {
    let [mu1, mu2, mu3] = *intensities;
    let tau0 = photon_number_weight(0, intensities, probs);
    let tau1 = photon_number_weight(1, intensities, probs);
    let (up, dn) = weighted_estimates(counts, total, intensities, probs, eps_sec);
    let s0 = (tau0 * (mu2 * dn[2] - mu3 * up[1]) / (mu2 - mu3)).max(0.0);
    let s1 = tau1
        * mu1
        * (dn[1] - up[2] - (mu2 * mu2 - mu3 * mu3) / (mu1 * mu1) * (up[0] - s0 / tau0))
        / (mu1 * (mu2 - mu3) - mu2 * mu2 + mu3 * mu3);
    (s0, s1)
}

/// Statistical-fluctuation spread added to the phase-error ratio when
/// transferring it from the test basis (c counts) to the key basis
/// (d counts).
fn phase_error_spread(eps_sec: f64, ratio: f64, c: f64, d: f64) -> f64 {
    let sum = c + d;
    let spread_log = (sum / (c * d * (1.0 - ratio) * ratio)
        * (UNION_BOUND_FACTOR / eps_sec).powi(2))
    .log2();
    let value = sum * (1.0 - ratio) * ratio / (c * d * std::f64::consts::LN_2) * spread_log;
    value.max(0.0).sqrt()
}

/// Run the estimation chain on one WCP observation record.
///
/// Returns the bounds, or the [`ZeroRateReason`] that makes the key
/// infeasible before the length formula applies. The only hard errors
/// are invalid parameters or a mismatched observation kind.
pub fn two_decoy_bounds(obs: &Observations, params: &ProtocolParams) -> Result<DecoyOutcome> {
    params.validate()?;
    let (intensities, probs) = match params.variant {
        ProtocolVariant::DecoyWcp {
            intensities,
            intensity_probs,
            ..
        } => (intensities, intensity_probs),
        ProtocolVariant::SinglePhoton { .. } => {
            return Err(Error::ProtocolMismatch {
                expected: "decoy-WCP parameters",
            })
        }
    };
    let (n_x, n_z, m_z) = match obs {
        Observations::DecoyWcp { n_x, n_z, m_z, .. } => (n_x, n_z, m_z),
        Observations::SinglePhoton { .. } => {
            return Err(Error::ProtocolMismatch {
                expected: "decoy-WCP observations",
            })
        }
    };

    let n_x_tot: f64 = n_x.iter().sum();
    let n_z_tot: f64 = n_z.iter().sum();
    let m_z_tot: f64 = m_z.iter().sum();
    if n_x_tot <= 0.0 {
        return Ok(DecoyOutcome::Zero(ZeroRateReason::NoSignal));
    }

    let (s_x0, s_x1) = yield_bounds(n_x, n_x_tot, &intensities, &probs, params.eps_sec);
    let (_, s_z1) = yield_bounds(n_z, n_z_tot, &intensities, &probs, params.eps_sec);
    if s_x1 <= 0.0 || s_z1 <= 0.0 || s_x0 + s_x1 > n_x_tot {
        return Ok(DecoyOutcome::Zero(ZeroRateReason::DecoyBoundsCrossed));
    }

    let [_, mu2, mu3] = intensities;
    let tau1 = photon_number_weight(1, &intensities, &probs);
    let (m_up, m_dn) = weighted_estimates(m_z, m_z_tot, &intensities, &probs, params.eps_sec);
    let v_z1 = (tau1 * (m_up[1] - m_dn[2]) / (mu2 - mu3)).clamp(0.0, s_z1);

    let ratio = v_z1 / s_z1;
    let phi_x = if ratio <= 0.0 {
        ratio
    } else {
        ratio + phase_error_spread(params.eps_sec, ratio, s_z1, s_x1)
    };
    if phi_x >= 0.5 {
        return Ok(DecoyOutcome::Zero(ZeroRateReason::PhaseErrorSaturated));
    }

    Ok(DecoyOutcome::Bounds(DecoyBounds {
        s_x0,
        s_x1,
        s_z1,
        v_z1,
        phi_x,
    }))
}

/// Secret-key length of one WCP observation record (clamped at zero,
/// with the reason the clamp fired).
pub fn wcp_key_length(obs: &Observations, params: &ProtocolParams) -> Result<KeyLength> {
    let bounds = match two_decoy_bounds(obs, params)? {
        DecoyOutcome::Bounds(b) => b,
        DecoyOutcome::Zero(reason) => return Ok(KeyLength::zero(reason)),
    };
    let (n_x, m_x) = match obs {
        Observations::DecoyWcp { n_x, m_x, .. } => (n_x, m_x),
        Observations::SinglePhoton { .. } => unreachable!("checked in two_decoy_bounds"),
    };
    let n_x_tot: f64 = n_x.iter().sum();
    let m_x_tot: f64 = m_x.iter().sum();
    let leak_ec = params.f_ec * n_x_tot * binary_entropy(m_x_tot / n_x_tot);
    let length = bounds.s_x0 + bounds.s_x1 * (1.0 - binary_entropy(bounds.phi_x))
        - leak_ec
        - SECRECY_TERM_COUNT * (UNION_BOUND_FACTOR / params.eps_sec).log2()
        - (CORRECTNESS_FACTOR / params.eps_cor).log2();
    let bits = length.floor();
    if bits <= 0.0 {
        Ok(KeyLength::zero(ZeroRateReason::EntropyExhausted))
    } else {
        Ok(KeyLength { bits, reason: None })
    }
}

/// One stochastic trial with photon-number-resolved bookkeeping.
///
/// Draws the per-pulse photon numbers of a WCP train in aggregate
/// (binomial splits of the Poisson mixture, tail lumped at 16 photons),
/// applies the threshold-detector click probability
/// 1 − (1 − N)(1 − η_tot)^n per photon number, and sifts clicks into the
/// X/Z bases. Returns the observable counts together with the number of
/// X-basis detections that really came from single-photon pulses — the
/// quantity the s_X1 bound of [`two_decoy_bounds`] must stay below.
pub fn photon_number_split_trial(
    eta_tot: f64,
    n_noise: f64,
    q0: f64,
    params: &ProtocolParams,
    pulses: f64,
    seed: u64,
) -> Result<(Observations, f64)> {
    const MAX_PHOTONS: u32 = 16;
    params.validate()?;
    let (intensities, probs, basis_prob) = match params.variant {
        ProtocolVariant::DecoyWcp {
            intensities,
            intensity_probs,
            basis_prob,
        } => (intensities, intensity_probs, basis_prob),
        ProtocolVariant::SinglePhoton { .. } => {
            return Err(Error::ProtocolMismatch {
                expected: "decoy-WCP parameters",
            })
        }
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draw = |n: f64, p: f64| -> f64 {
        if n < 1.0 || p <= 0.0 {
            return 0.0;
        }
        Binomial::new(n.round() as u64, p.min(1.0))
            .expect("valid binomial")
            .sample(&mut rng) as f64
    };

    let qx2 = basis_prob * basis_prob;
    let qz2 = (1.0 - basis_prob) * (1.0 - basis_prob);
    let mut n_x = [0.0; 3];
    let mut m_x = [0.0; 3];
    let mut n_z = [0.0; 3];
    let mut m_z = [0.0; 3];
    let mut true_single_x = 0.0;

    let mut remaining_pulses = pulses;
    let mut remaining_prob = 1.0;
    for k in 0..3 {
        let sent = if k == 2 {
            remaining_pulses
        } else {
            draw(remaining_pulses, probs[k] / remaining_prob)
        };
        remaining_pulses -= sent;
        remaining_prob -= probs[k];

        // split the sent pulses over photon numbers 0..=MAX_PHOTONS
        let mu = intensities[k];
        let mut left = sent;
        let mut left_prob = 1.0;
        for n in 0..=MAX_PHOTONS {
            let pmf = (-mu).exp() * mu.powi(n as i32) / (1..=n).map(f64::from).product::<f64>();
            let with_n = if n == MAX_PHOTONS {
                left
            } else {
                draw(left, (pmf / left_prob).min(1.0))
            };
            left -= with_n;
            left_prob = (left_prob - pmf).max(f64::MIN_POSITIVE);

            let p_signal = 1.0 - (1.0 - eta_tot).powi(n as i32);
            let p_det = 1.0 - (1.0 - n_noise) * (1.0 - p_signal);
            let detected = draw(with_n, p_det);
            // error probability given a click: q0 on signal clicks,
            // 1/2 on noise-only clicks
            let q_err = if p_det > 0.0 {
                (q0 * p_signal + 0.5 * (1.0 - p_signal) * n_noise) / p_det
            } else {
                0.0
            };
            let x_clicks = draw(detected, qx2);
            let z_clicks = draw(detected - x_clicks, qz2 / (1.0 - qx2));
            n_x[k] += x_clicks;
            n_z[k] += z_clicks;
            m_x[k] += draw(x_clicks, q_err);
            m_z[k] += draw(z_clicks, q_err);
            if n == 1 {
                true_single_x += x_clicks;
            }
        }
    }

    Ok((
        Observations::DecoyWcp {
            n_x,
            m_x,
            n_z,
            m_z,
            pulses,
        },
        true_single_x,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::observations::{expected_observations, DetectionModel};
    use approx::assert_relative_eq;

    const NIGHT_DOWN_NOISE: f64 = 4.655_582_904_876_327e-5;

    fn night_down() -> DetectionModel {
        DetectionModel {
            eta_det: 0.5,
            t_opt: 0.8,
            q0: 0.02,
            n_noise: NIGHT_DOWN_NOISE,
        }
    }

    /// Pulse count that fills a 1e8 X-basis block at eta = 0.1 under the
    /// night sky with default WCP parameters.
    const REFERENCE_PULSES: f64 = 8_393_166_003.133_487;

    fn reference_observations() -> (Observations, ProtocolParams) {
        let params = ProtocolParams::decoy_wcp(1e8);
        let obs = expected_observations(0.1, &night_down(), &params, REFERENCE_PULSES).unwrap();
        (obs, params)
    }

    #[test]
    fn photon_number_weights_match_frozen_values() {
        let mus = [0.5, 0.1, 1e-3];
        let ps = [0.7, 0.2, 0.1];
        assert_relative_eq!(
            photon_number_weight(0, &mus, &ps),
            0.705_438_995_389_372_7,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            photon_number_weight(1, &mus, &ps),
            0.230_482_379_310_124_22,
            max_relative = 1e-14
        );
    }

    #[test]
    fn estimation_chain_reproduces_frozen_reference_bounds() {
        let (obs, params) = reference_observations();
        // the reference pulse count fills the block exactly
        if let Observations::DecoyWcp { n_x, .. } = obs {
            assert_relative_eq!(n_x.iter().sum::<f64>(), 1e8, max_relative = 1e-9);
        }
        let bounds = match two_decoy_bounds(&obs, &params).unwrap() {
            DecoyOutcome::Bounds(b) => b,
            DecoyOutcome::Zero(r) => panic!("reference point must be feasible, got {r}"),
        };
        assert_relative_eq!(bounds.s_x0, 0.0, epsilon = 1e-9);
        assert_relative_eq!(bounds.s_x1, 59_272_984.189_553_276, max_relative = 1e-9);
        assert_relative_eq!(bounds.s_z1, 576_510.549_426_927_5, max_relative = 1e-9);
        assert_relative_eq!(bounds.v_z1, 29_707.818_812_753_58, max_relative = 1e-9);
        assert_relative_eq!(bounds.phi_x, 0.054_108_291_719_699_54, max_relative = 1e-9);
    }

    #[test]
    fn key_length_reproduces_frozen_reference_value() {
        let (obs, params) = reference_observations();
        let key = wcp_key_length(&obs, &params).unwrap();
        assert!(key.reason.is_none());
        // floor() sits 0.89 above the integer boundary; allow ±3 for
        // cross-platform rounding of the huge intermediate sums
        assert!(
            (key.bits - 23_850_191.0).abs() <= 3.0,
            "key bits {} vs frozen 23850191",
            key.bits
        );
    }

    #[test]
    fn all_zero_counts_yield_no_signal() {
        let params = ProtocolParams::decoy_wcp(1e8);
        let obs = Observations::DecoyWcp {
            n_x: [0.0; 3],
            m_x: [0.0; 3],
            n_z: [0.0; 3],
            m_z: [0.0; 3],
            pulses: 1e6,
        };
        assert_eq!(
            two_decoy_bounds(&obs, &params).unwrap(),
            DecoyOutcome::Zero(ZeroRateReason::NoSignal)
        );
        let key = wcp_key_length(&obs, &params).unwrap();
        assert_eq!(key.bits, 0.0);
        assert_eq!(key.reason, Some(ZeroRateReason::NoSignal));
    }

    #[test]
    fn noiseless_key_fraction_approaches_single_photon_share() {
        // lossless link, no stray light, vanishing decoy/vacuum usage:
        // l/n_X must approach the fraction of detections that came from
        // single-photon pulses, mu e^(-mu) / (1 - e^(-mu))
        let mu = 0.5;
        let params = ProtocolParams {
            variant: ProtocolVariant::DecoyWcp {
                intensities: [mu, 0.05, 1e-3],
                intensity_probs: [0.99, 0.005, 0.005],
                basis_prob: 0.99,
            },
            ..ProtocolParams::decoy_wcp(1e13)
        };
        let model = DetectionModel {
            eta_det: 1.0,
            t_opt: 1.0,
            q0: 0.0,
            n_noise: 0.0,
        };
        let click = |m: f64| 1.0 - (-m).exp();
        let per_pulse_block = 0.99f64.powi(2)
            * (0.99 * click(0.5) + 0.005 * click(0.05) + 0.005 * click(1e-3));
        let pulses = 1e13 / per_pulse_block;
        let obs = expected_observations(1.0, &model, &params, pulses).unwrap();
        let key = wcp_key_length(&obs, &params).unwrap();
        let fraction = key.bits / 1e13;
        let single_photon_share = mu * (-mu).exp() / (1.0 - (-mu).exp());
        assert_relative_eq!(fraction, 0.764_037_757_413_500_1, epsilon = 1e-6);
        assert!(
            (fraction / single_photon_share - 1.0).abs() < 0.05,
            "fraction {fraction} vs share {single_photon_share}"
        );
    }

    #[test]
    fn single_photon_bound_stays_below_truth_across_trials() {
        // photon-number-resolved simulation: the s_X1 estimate must not
        // exceed the true single-photon detection count (up to the
        // eps_sec failure probability, which is unobservable in 120 runs)
        let params = ProtocolParams::decoy_wcp(1e5);
        let mut violations = 0;
        for trial in 0..120 {
            let (obs, true_single_x) =
                photon_number_split_trial(0.04, NIGHT_DOWN_NOISE, 0.02, &params, 3e6, 900 + trial)
                    .unwrap();
            match two_decoy_bounds(&obs, &params).unwrap() {
                DecoyOutcome::Bounds(b) => {
                    if b.s_x1 > true_single_x {
                        violations += 1;
                    }
                }
                // a crossed bound clamps s_X1 to nothing — trivially valid
                DecoyOutcome::Zero(_) => {}
            }
        }
        assert_eq!(violations, 0, "bound violated in {violations}/120 trials");
    }

    #[test]
    fn key_shrinks_with_noise_and_grows_with_block() {
        let params = ProtocolParams::decoy_wcp(1e8);
        let base = expected_observations(0.1, &night_down(), &params, REFERENCE_PULSES).unwrap();
        let noisy_model = DetectionModel {
            n_noise: NIGHT_DOWN_NOISE * 50.0,
            ..night_down()
        };
        let noisy = expected_observations(0.1, &noisy_model, &params, REFERENCE_PULSES).unwrap();
        let l_base = wcp_key_length(&base, &params).unwrap().bits;
        let l_noisy = wcp_key_length(&noisy, &params).unwrap().bits;
        assert!(l_noisy < l_base);

        let small = expected_observations(0.1, &night_down(), &params, REFERENCE_PULSES / 10.0)
            .unwrap();
        let l_small = wcp_key_length(&small, &params).unwrap().bits;
        assert!(l_small < l_base);
        // smaller blocks also lose a larger *fraction* to finite-size terms
        assert!(l_small / (1e8 / 10.0) < l_base / 1e8);
    }

    #[test]
    fn mismatched_observation_kind_is_an_error() {
        let params = ProtocolParams::decoy_wcp(1e8);
        let sp_obs = Observations::SinglePhoton {
            sifted: 1e5,
            errors: 1e3,
            pulses: 1e7,
        };
        assert!(matches!(
            two_decoy_bounds(&sp_obs, &params),
            Err(Error::ProtocolMismatch { .. })
        ));
        let sp_params = ProtocolParams::single_photon(1e6);
        let (obs, _) = reference_observations();
        assert!(matches!(
            wcp_key_length(&obs, &sp_params),
            Err(Error::ProtocolMismatch { .. })
        ));
    }
}
