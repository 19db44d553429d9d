//! PDT-averaged secret-key rates and protocol-parameter optimization.
//!
//! The fading channel is summarized by a [`TransmittanceDistribution`];
//! the average rate is the probability-weighted sum of pointwise rates
//! over the occupied bins,
//!
//! ```text
//! R̄ = Σᵢ R(ηᵢ) P(ηᵢ),   R(η) = l(η) / N_sent(η),
//! ```
//!
//! where N_sent is the number of pulses the source must fire to fill
//! the protocol's sifted-detection block at transmittance η. Rates are
//! therefore secret bits **per sent pulse**; multiply by the repetition
//! rate for bits per second.
//!
//! Optimization searches the protocol's free parameters:
//!
//! - single-photon: the parameter-estimation fraction k/n over a fixed
//!   ratio grid (golden-section refined — the objective is smooth along
//!   this axis) × the QBER tolerance. Between two observed bin QBERs
//!   the rate strictly decreases in Q_tol, so its maximum sits exactly
//!   at one of the observed values; the candidate set is those exact
//!   per-bin QBERs (bit-for-bit, so the abort comparison cannot lose
//!   the boundary bin to rounding).
//! - WCP: two rounds of coordinate descent over signal/decoy intensity,
//!   the signal-intensity send probability, and the key-basis
//!   probability, on fixed grids honoring μ₁ > μ₂ + μ₃.

use crate::error::{Error, Result};
use crate::noise::qber;
use crate::pdt::TransmittanceDistribution;
use crate::rates::observations::{expected_observations, DetectionModel};
use crate::rates::{
    sp_key_length, wcp_key_length, ProtocolParams, ProtocolVariant, ZeroRateReason,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Pointwise rate at one transmittance bin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinRate {
    /// Transmittance the block was evaluated at (bin center).
    pub eta: f64,
    /// Probability mass of the bin (1 for a standalone evaluation).
    pub probability: f64,
    /// Secret bits extracted from one block at this transmittance.
    pub key_length: f64,
    /// Secret bits per sent pulse, l(η)/N_sent(η).
    pub rate: f64,
    /// Why the key clamped to zero, when it did.
    pub reason: Option<ZeroRateReason>,
}

/// PDT-averaged rate with its per-bin breakdown and the parameter set
/// that produced it (the argmax when returned by [`optimize_rate`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    /// Probability-weighted average key length per block (bits).
    pub key_length: f64,
    /// R̄: secret bits per sent pulse averaged over the PDT.
    pub rate_avg: f64,
    /// R̄ · rep_rate (secret bits per second).
    pub rate_bps: f64,
    /// Parameters the rates were evaluated with.
    pub params: ProtocolParams,
    /// Pointwise rates at the occupied bins, in ascending η.
    pub bins: Vec<BinRate>,
    /// Set when R̄ = 0: the zero reason carrying the most probability.
    pub reason: Option<ZeroRateReason>,
}

/// Pulses needed to fill the block and the exact observed QBER for a
/// single-photon block at transmittance `eta`; `None` when nothing
/// clicks at all.
///
/// Both the rate evaluation and the optimizer's Q_tol candidate list go
/// through this one function so the tolerance comparison sees
/// bit-identical values.
fn sp_block_observation(
    eta: f64,
    model: &DetectionModel,
    params: &ProtocolParams,
) -> Option<(f64, f64)> {
    let p_det = model.sp_detection_prob(eta);
    if p_det <= 0.0 {
        return None;
    }
    let pulses = params.block_n / (0.5 * p_det);
    let q_obs = qber(model.n_noise, model.eta_total(eta), model.q0)
        .expect("p_det > 0 implies a defined error rate");
    Some((pulses, q_obs))
}

/// Pulses needed to fill the X-basis block for a WCP train at
/// transmittance `eta`; `None` when nothing clicks.
fn wcp_block_pulses(eta: f64, model: &DetectionModel, params: &ProtocolParams) -> Option<f64> {
    let ProtocolVariant::DecoyWcp {
        intensities,
        intensity_probs,
        basis_prob,
    } = params.variant
    else {
        return None;
    };
    let per_pulse: f64 = intensities
        .iter()
        .zip(intensity_probs)
        .map(|(&mu, p)| p * model.wcp_detection_prob(eta, mu))
        .sum::<f64>()
        * basis_prob
        * basis_prob;
    (per_pulse > 0.0).then(|| params.block_n / per_pulse)
}

/// Secret-key rate of one block accumulated entirely at transmittance
/// `eta` (probability field set to 1).
pub fn rate_at_eta(eta: f64, params: &ProtocolParams, model: &DetectionModel) -> Result<BinRate> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ProbabilityRange {
            name: "eta",
            value: eta,
        });
    }
    params.validate()?;
    let no_signal = BinRate {
        eta,
        probability: 1.0,
        key_length: 0.0,
        rate: 0.0,
        reason: Some(ZeroRateReason::NoSignal),
    };
    let (key, pulses) = match params.variant {
        ProtocolVariant::SinglePhoton { pe_bits, q_tol } => {
            let Some((pulses, q_obs)) = sp_block_observation(eta, model, params) else {
                return Ok(no_signal);
            };
            let key = sp_key_length(
                params.block_n - pe_bits,
                pe_bits,
                q_tol,
                params.q,
                params.eps_sec,
                params.eps_cor,
                params.f_ec,
                q_obs,
            );
            (key, pulses)
        }
        ProtocolVariant::DecoyWcp { .. } => {
            let Some(pulses) = wcp_block_pulses(eta, model, params) else {
                return Ok(no_signal);
            };
            let obs = expected_observations(eta, model, params, pulses)?;
            (wcp_key_length(&obs, params)?, pulses)
        }
    };
    Ok(BinRate {
        eta,
        probability: 1.0,
        key_length: key.bits,
        rate: key.bits / pulses,
        reason: key.reason,
    })
}

/// The zero reason carrying the most probability mass, ties broken in
/// declaration order.
fn dominant_reason(bins: &[BinRate]) -> Option<ZeroRateReason> {
    use ZeroRateReason::*;
    const ORDER: [ZeroRateReason; 6] = [
        NoSignal,
        AbortOnQber,
        EntropyExhausted,
        DecoyBoundsCrossed,
        PhaseErrorSaturated,
        OptimizationStalled,
    ];
    let mut mass = [0.0; 6];
    for bin in bins {
        if let Some(reason) = bin.reason {
            let idx = ORDER.iter().position(|r| *r == reason).unwrap();
            mass[idx] += bin.probability;
        }
    }
    let best = (0..6).max_by(|&a, &b| mass[a].partial_cmp(&mass[b]).unwrap())?;
    (mass[best] > 0.0).then_some(ORDER[best])
}

/// Average the pointwise rate over the occupied bins of a PDT.
pub fn pdt_averaged_rate(
    pdt: &TransmittanceDistribution,
    params: &ProtocolParams,
    model: &DetectionModel,
) -> Result<KeyRateResult> {
    params.validate()?;
    let occupied = pdt.occupied();
    let mut bins: Vec<BinRate> = occupied
        .par_iter()
        .map(|&(center, prob)| {
            rate_at_eta(center, params, model).map(|mut bin| {
                bin.probability = prob;
                bin
            })
        })
        .collect::<Result<_>>()?;
    bins.sort_by(|a, b| a.eta.partial_cmp(&b.eta).unwrap());
    let rate_avg: f64 = bins.iter().map(|b| b.rate * b.probability).sum();
    let key_length: f64 = bins.iter().map(|b| b.key_length * b.probability).sum();
    let reason = (rate_avg == 0.0).then(|| dominant_reason(&bins)).flatten();
    Ok(KeyRateResult {
        key_length,
        rate_avg,
        rate_bps: rate_avg * params.rep_rate,
        params: *params,
        bins,
        reason,
    })
}

/// Parameter-estimation fractions k/n searched by the SP optimizer.
const SP_PE_RATIOS: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
/// Signal intensities searched by the WCP optimizer.
const WCP_MU1_GRID: [f64; 5] = [0.3, 0.4, 0.5, 0.6, 0.7];
/// Decoy intensities searched by the WCP optimizer.
const WCP_MU2_GRID: [f64; 4] = [0.02, 0.05, 0.1, 0.15];
/// Signal-intensity send probabilities searched by the WCP optimizer
/// (the remainder splits 2:1 over decoy and vacuum).
const WCP_P1_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
/// Key-basis probabilities searched by the WCP optimizer.
const WCP_QX_GRID: [f64; 4] = [0.7, 0.8, 0.9, 0.95];

fn sp_params_with(base: &ProtocolParams, ratio: f64, q_tol: f64) -> ProtocolParams {
    ProtocolParams {
        variant: ProtocolVariant::SinglePhoton {
            pe_bits: base.block_n * ratio / (1.0 + ratio),
            q_tol,
        },
        ..*base
    }
}

/// Search the protocol's free parameters for the best PDT-averaged rate.
///
/// The best parameter set is echoed in the returned result; when no
/// searched point yields a positive key the base-parameter evaluation is
/// returned with [`ZeroRateReason::OptimizationStalled`].
pub fn optimize_rate(
    pdt: &TransmittanceDistribution,
    base_params: &ProtocolParams,
    model: &DetectionModel,
) -> Result<KeyRateResult> {
    base_params.validate()?;
    let mut best = pdt_averaged_rate(pdt, base_params, model)?;

    match base_params.variant {
        ProtocolVariant::SinglePhoton { q_tol, .. } => {
            // exact observed QBERs of the occupied bins, plus the base
            // tolerance; deduplicated, restricted to the valid range
            let mut candidates: Vec<f64> = pdt
                .occupied()
                .iter()
                .filter_map(|&(center, _)| sp_block_observation(center, model, base_params))
                .map(|(_, q_obs)| q_obs)
                .chain(std::iter::once(q_tol))
                .filter(|q| (0.0..0.5).contains(q))
                .collect();
            candidates.sort_by(|a, b| a.partial_cmp(b).unwrap());
            candidates.dedup();

            let grid: Vec<(f64, f64)> = SP_PE_RATIOS
                .iter()
                .flat_map(|&r| candidates.iter().map(move |&q| (r, q)))
                .collect();
            let evaluated: Vec<KeyRateResult> = grid
                .par_iter()
                .map(|&(r, q)| pdt_averaged_rate(pdt, &sp_params_with(base_params, r, q), model))
                .collect::<Result<_>>()?;
            let mut best_ratio = None;
            for ((r, _), result) in grid.iter().zip(evaluated) {
                if result.rate_avg > best.rate_avg {
                    best_ratio = Some(*r);
                    best = result;
                }
            }

            // golden-section refinement of the estimation fraction
            // between the grid neighbors of the winning ratio
            if let (Some(ratio), ProtocolVariant::SinglePhoton { q_tol, .. }) =
                (best_ratio, best.params.variant)
            {
                let idx = SP_PE_RATIOS.iter().position(|r| *r == ratio).unwrap();
                let lo = if idx == 0 { ratio / 2.0 } else { SP_PE_RATIOS[idx - 1] };
                let hi = if idx == SP_PE_RATIOS.len() - 1 {
                    1.5 * ratio
                } else {
                    SP_PE_RATIOS[idx + 1]
                };
                let refined = golden_section(lo, hi, 40, |r| {
                    pdt_averaged_rate(pdt, &sp_params_with(base_params, r, q_tol), model)
                        .map(|res| res.rate_avg)
                        .unwrap_or(0.0)
                });
                let result =
                    pdt_averaged_rate(pdt, &sp_params_with(base_params, refined, q_tol), model)?;
                if result.rate_avg > best.rate_avg {
                    best = result;
                }
            }
        }
        ProtocolVariant::DecoyWcp { .. } => {
            for _round in 0..2 {
                for coordinate in 0..4 {
                    let trials: &[f64] = match coordinate {
                        0 => &WCP_MU1_GRID,
                        1 => &WCP_MU2_GRID,
                        2 => &WCP_P1_GRID,
                        _ => &WCP_QX_GRID,
                    };
                    for &value in trials {
                        let ProtocolVariant::DecoyWcp {
                            mut intensities,
                            mut intensity_probs,
                            mut basis_prob,
                        } = best.params.variant
                        else {
                            unreachable!()
                        };
                        match coordinate {
                            0 => intensities[0] = value,
                            1 => intensities[1] = value,
                            2 => {
                                intensity_probs =
                                    [value, (1.0 - value) * 2.0 / 3.0, (1.0 - value) / 3.0]
                            }
                            _ => basis_prob = value,
                        }
                        let params = ProtocolParams {
                            variant: ProtocolVariant::DecoyWcp {
                                intensities,
                                intensity_probs,
                                basis_prob,
                            },
                            ..*base_params
                        };
                        if params.validate().is_err() {
                            continue;
                        }
                        let result = pdt_averaged_rate(pdt, &params, model)?;
                        if result.rate_avg > best.rate_avg {
                            best = result;
                        }
                    }
                }
            }
        }
    }

    if best.rate_avg == 0.0 {
        best.reason = Some(ZeroRateReason::OptimizationStalled);
    }
    Ok(best)
}

/// Golden-section maximization of `f` on [lo, hi].
fn golden_section(mut lo: f64, mut hi: f64, iterations: usize, f: impl Fn(f64) -> f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut a = hi - INV_PHI * (hi - lo);
    let mut b = lo + INV_PHI * (hi - lo);
    let mut fa = f(a);
    let mut fb = f(b);
    for _ in 0..iterations {
        if fa > fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - INV_PHI * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + INV_PHI * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Pulses the source must fire to fill one block at transmittance
/// `eta`, or `None` when nothing clicks (the N_sent of R = l/N_sent).
pub fn block_pulses(eta: f64, params: &ProtocolParams, model: &DetectionModel) -> Option<f64> {
    match params.variant {
        ProtocolVariant::SinglePhoton { .. } => {
            sp_block_observation(eta, model, params).map(|(pulses, _)| pulses)
        }
        ProtocolVariant::DecoyWcp { .. } => wcp_block_pulses(eta, model, params),
    }
}
