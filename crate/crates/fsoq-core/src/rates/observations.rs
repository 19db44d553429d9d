//! Forward detection model: expected (or stochastically drawn) sifted
//! and error counts per intensity and basis at a given transmittance.
//!
//! The detection model is the minimal threshold-detector picture:
//!
//! - effective channel transmittance η_tot = η·η_det·T_opt,
//! - single photons: signal expectation N_sig = η_tot and click
//!   probability P_det = 1 − (1 − N_noise)(1 − η_tot),
//! - WCP intensity μ: N_sig = 1 − e^(−μ η_tot) and
//!   P_det = 1 − (1 − N_noise) e^(−μ η_tot),
//! - QBER per intensity from the unpolarized-noise mixture
//!   Q₀ + N/(2(N + N_sig)).
//!
//! Sifting: single-photon links use symmetric 50/50 bases (probability
//! 1/2 that both sides match); WCP links sift into the X basis with
//! probability q_x² and the Z basis with (1 − q_x)².

use crate::error::{Error, Result};
use crate::geometry::LinkScenario;
use crate::noise::{qber, NoiseEnvironment};
use crate::rates::{ProtocolParams, ProtocolVariant};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

/// Receiver efficiency and noise floor for one scenario + sky pairing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionModel {
    /// Detector efficiency η_det.
    pub eta_det: f64,
    /// Receiver optics transmittance T_opt.
    pub t_opt: f64,
    /// Intrinsic error probability Q₀.
    pub q0: f64,
    /// Expected stray photons per detection window.
    pub n_noise: f64,
}

impl DetectionModel {
    /// Resolve the model for a scenario under a sky environment; the
    /// stray count follows the link direction and day/night phase.
    pub fn from_scenario(scenario: &LinkScenario, env: &NoiseEnvironment) -> Result<Self> {
        scenario.validate()?;
        env.validate()?;
        Ok(Self {
            eta_det: scenario.detector_efficiency,
            t_opt: scenario.optics_transmittance,
            q0: env.q0,
            n_noise: env.stray_photons(
                scenario.direction,
                scenario.receiver_radius,
                scenario.wavelength,
            ),
        })
    }

    /// Effective transmittance η·η_det·T_opt.
    pub fn eta_total(&self, eta: f64) -> f64 {
        eta * self.eta_det * self.t_opt
    }

    /// Click probability for a single-photon pulse.
    pub fn sp_detection_prob(&self, eta: f64) -> f64 {
        let eta_tot = self.eta_total(eta);
        1.0 - (1.0 - self.n_noise) * (1.0 - eta_tot)
    }

    /// Click probability for a WCP pulse of intensity `mu`.
    pub fn wcp_detection_prob(&self, eta: f64, mu: f64) -> f64 {
        1.0 - (1.0 - self.n_noise) * (-mu * self.eta_total(eta)).exp()
    }

    /// QBER for the given signal expectation under this noise floor;
    /// zero when nothing arrives at all (the caller sees zero counts).
    fn qber_or_zero(&self, n_sig: f64) -> Result<f64> {
        match qber(self.n_noise, n_sig, self.q0) {
            Ok(q) => Ok(q),
            Err(Error::NoSignal) => Ok(0.0),
            Err(other) => Err(other),
        }
    }
}

/// Sifted and error counts produced by one batch of sent pulses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observations {
    SinglePhoton {
        /// Sifted detections (both bases matched).
        sifted: f64,
        /// Errors among the sifted detections.
        errors: f64,
        /// Pulses sent to produce them.
        pulses: f64,
    },
    DecoyWcp {
        /// X-basis sifted detections per intensity.
        n_x: [f64; 3],
        /// X-basis errors per intensity.
        m_x: [f64; 3],
        /// Z-basis sifted detections per intensity.
        n_z: [f64; 3],
        /// Z-basis errors per intensity.
        m_z: [f64; 3],
        /// Pulses sent to produce them.
        pulses: f64,
    },
}

/// Expected counts from `pulses` pulses at transmittance `eta`
/// (deterministic expected-value mode).
pub fn expected_observations(
    eta: f64,
    model: &DetectionModel,
    params: &ProtocolParams,
    pulses: f64,
) -> Result<Observations> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ProbabilityRange {
            name: "eta",
            value: eta,
        });
    }
    params.validate()?;
    match params.variant {
        ProtocolVariant::SinglePhoton { .. } => {
            let sifted = pulses * 0.5 * model.sp_detection_prob(eta);
            let errors = sifted * model.qber_or_zero(model.eta_total(eta))?;
            Ok(Observations::SinglePhoton {
                sifted,
                errors,
                pulses,
            })
        }
        ProtocolVariant::DecoyWcp {
            intensities,
            intensity_probs,
            basis_prob,
        } => {
            let qx2 = basis_prob * basis_prob;
            let qz2 = (1.0 - basis_prob) * (1.0 - basis_prob);
            let mut n_x = [0.0; 3];
            let mut m_x = [0.0; 3];
            let mut n_z = [0.0; 3];
            let mut m_z = [0.0; 3];
            for k in 0..3 {
                let p_det = model.wcp_detection_prob(eta, intensities[k]);
                let n_sig = 1.0 - (-intensities[k] * model.eta_total(eta)).exp();
                let q = model.qber_or_zero(n_sig)?;
                n_x[k] = pulses * intensity_probs[k] * qx2 * p_det;
                n_z[k] = pulses * intensity_probs[k] * qz2 * p_det;
                m_x[k] = n_x[k] * q;
                m_z[k] = n_z[k] * q;
            }
            Ok(Observations::DecoyWcp {
                n_x,
                m_x,
                n_z,
                m_z,
                pulses,
            })
        }
    }
}

fn binomial<R: rand::Rng>(rng: &mut R, n: f64, p: f64) -> f64 {
    if n < 1.0 || p <= 0.0 {
        return 0.0;
    }
    let trials = n.round() as u64;
    Binomial::new(trials, p.min(1.0))
        .expect("probability validated")
        .sample(rng) as f64
}

/// Counts drawn stochastically (seeded) instead of in expectation:
/// detections are binomial over the sent pulses, errors binomial over
/// the detections.
pub fn stochastic_observations(
    eta: f64,
    model: &DetectionModel,
    params: &ProtocolParams,
    pulses: f64,
    seed: u64,
) -> Result<Observations> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::ProbabilityRange {
            name: "eta",
            value: eta,
        });
    }
    params.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    match params.variant {
        ProtocolVariant::SinglePhoton { .. } => {
            let sifted = binomial(&mut rng, pulses, 0.5 * model.sp_detection_prob(eta));
            let errors = binomial(&mut rng, sifted, model.qber_or_zero(model.eta_total(eta))?);
            Ok(Observations::SinglePhoton {
                sifted,
                errors,
                pulses,
            })
        }
        ProtocolVariant::DecoyWcp {
            intensities,
            intensity_probs,
            basis_prob,
        } => {
            let qx2 = basis_prob * basis_prob;
            let qz2 = (1.0 - basis_prob) * (1.0 - basis_prob);
            let mut n_x = [0.0; 3];
            let mut m_x = [0.0; 3];
            let mut n_z = [0.0; 3];
            let mut m_z = [0.0; 3];
            // split the pulse train over intensities, then over the two
            // sifted outcomes of each trial (X, Z, discard)
            let mut remaining = pulses;
            let mut remaining_prob = 1.0;
            for k in 0..3 {
                let sent = if k == 2 {
                    remaining
                } else {
                    binomial(&mut rng, remaining, intensity_probs[k] / remaining_prob)
                };
                remaining -= sent;
                remaining_prob -= intensity_probs[k];

                let p_det = model.wcp_detection_prob(eta, intensities[k]);
                let n_sig = 1.0 - (-intensities[k] * model.eta_total(eta)).exp();
                let q = model.qber_or_zero(n_sig)?;
                n_x[k] = binomial(&mut rng, sent, p_det * qx2);
                let z_prob = p_det * qz2 / (1.0 - p_det * qx2);
                n_z[k] = binomial(&mut rng, sent - n_x[k], z_prob);
                m_x[k] = binomial(&mut rng, n_x[k], q);
                m_z[k] = binomial(&mut rng, n_z[k], q);
            }
            Ok(Observations::DecoyWcp {
                n_x,
                m_x,
                n_z,
                m_z,
                pulses,
            })
        }
    }
}
