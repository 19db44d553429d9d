//! Monte-Carlo reconstruction of the probability distribution of
//! transmittance (PDT).
//!
//! Draws M independent elliptic-beam realizations, evaluates the aperture
//! transmittance of each, and accumulates a histogram on uniform bins over
//! [0, 1] together with summary statistics.
//!
//! Determinism: sample `i` is generated from its own counter-mode RNG
//! stream (base seed + stream index `i`), so the result is bit-identical
//! for a fixed seed regardless of how samples are distributed over rayon
//! workers — shrinking or growing the thread pool cannot reorder or
//! repartition any random draw.

use crate::beam::{BeamSample, EllipticBeamDistribution};
use crate::error::{Error, Result};
use crate::geometry::{LinkScenario, WeatherCondition};
use crate::transmittance::{aperture_transmittance, aperture_transmittance_checked, ApertureSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Binned transmittance distribution with summary statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmittanceDistribution {
    /// Number of uniform bins over [0, 1].
    pub n_bins: usize,
    /// Probability mass per bin; sums to 1 within 1e−12.
    pub bin_prob: Vec<f64>,
    /// Number of Monte-Carlo samples M.
    pub sample_count: usize,
    /// Sample mean of η.
    pub mean_eta: f64,
    /// Sample median of η (midpoint convention for even M).
    pub median_eta: f64,
    /// Population standard deviation of η.
    pub std_eta: f64,
    /// Mean loss −10·log₁₀(mean_eta) in dB (infinite if mean_eta = 0).
    pub mean_loss_db: f64,
}

impl TransmittanceDistribution {
    /// Bin the given transmittance samples on uniform bins over [0, 1].
    pub fn from_samples(etas: &[f64], n_bins: usize) -> Result<Self> {
        if etas.is_empty() {
            return Err(Error::EmptySampleCount);
        }
        if n_bins < 2 {
            return Err(Error::BinCount { got: n_bins });
        }
        let m = etas.len();
        let mut counts = vec![0u64; n_bins];
        let mut sum = 0.0;
        for &eta in etas {
            let idx = ((eta * n_bins as f64) as usize).min(n_bins - 1);
            counts[idx] += 1;
            sum += eta;
        }
        let mean = sum / m as f64;
        let var = etas.iter().map(|&e| (e - mean) * (e - mean)).sum::<f64>() / m as f64;

        let mut sorted = etas.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("transmittances are finite"));
        let median = if m % 2 == 1 {
            sorted[m / 2]
        } else {
            0.5 * (sorted[m / 2 - 1] + sorted[m / 2])
        };

        Ok(Self {
            n_bins,
            bin_prob: counts.iter().map(|&c| c as f64 / m as f64).collect(),
            sample_count: m,
            mean_eta: mean,
            median_eta: median,
            std_eta: var.sqrt(),
            mean_loss_db: -10.0 * mean.log10(),
        })
    }

    /// Lower and upper edge of bin `i`.
    pub fn bin_edges(&self, i: usize) -> (f64, f64) {
        let width = 1.0 / self.n_bins as f64;
        (i as f64 * width, (i + 1) as f64 * width)
    }

    /// Center of bin `i`.
    pub fn bin_center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) / self.n_bins as f64
    }

    /// Occupied bins as (center, probability) pairs.
    pub fn occupied(&self) -> Vec<(f64, f64)> {
        self.bin_prob
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| (self.bin_center(i), p))
            .collect()
    }

    /// Index of the most probable bin (first one on ties).
    pub fn mode_bin(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.bin_prob.iter().enumerate() {
            if p > self.bin_prob[best] {
                best = i;
            }
        }
        best
    }

    /// Total probability in bins whose upper edge is at or below
    /// `threshold` (whole bins only).
    pub fn mass_below(&self, threshold: f64) -> f64 {
        self.bin_prob
            .iter()
            .enumerate()
            .take_while(|(i, _)| self.bin_edges(*i).1 <= threshold + 1e-12)
            .map(|(_, &p)| p)
            .sum()
    }
}

/// Generate the transmittance of every sample index in [0, m) in order.
fn run_sampler<F>(
    dist: &EllipticBeamDistribution,
    m: usize,
    seed: u64,
    eval: F,
) -> Result<Vec<f64>>
where
    F: Fn(usize, &BeamSample) -> Result<f64> + Sync,
{
    if m == 0 {
        return Err(Error::EmptySampleCount);
    }
    let base = ChaCha12Rng::seed_from_u64(seed);
    (0..m)
        .into_par_iter()
        .with_min_len(64)
        .map(|i| {
            let mut rng = base.clone();
            rng.set_stream(i as u64);
            let sample = dist.sample(&mut rng);
            eval(i, &sample)
        })
        .collect()
}

/// Reconstruct the PDT of a beam distribution through an aperture.
///
/// Draws `m` beam realizations (one RNG stream per sample index),
/// evaluates each transmittance, and bins on `n_bins` uniform bins over
/// [0, 1]. Deterministic for a fixed seed regardless of worker count.
pub fn sample_pdt(
    dist: &EllipticBeamDistribution,
    aperture: &ApertureSpec,
    m: usize,
    n_bins: usize,
    seed: u64,
) -> Result<TransmittanceDistribution> {
    if n_bins < 2 {
        return Err(Error::BinCount { got: n_bins });
    }
    let etas = run_sampler(dist, m, seed, |_, s| Ok(aperture_transmittance(s, aperture)))?;
    TransmittanceDistribution::from_samples(&etas, n_bins)
}

/// [`sample_pdt`] with a per-sample quadrature accuracy requirement.
///
/// Every transmittance is evaluated with an order-doubling error
/// estimate; if any sample's estimate exceeds `tolerance`, the failure is
/// reported together with the offending sample index.
pub fn sample_pdt_checked(
    dist: &EllipticBeamDistribution,
    aperture: &ApertureSpec,
    m: usize,
    n_bins: usize,
    seed: u64,
    tolerance: f64,
) -> Result<TransmittanceDistribution> {
    if n_bins < 2 {
        return Err(Error::BinCount { got: n_bins });
    }
    let etas = run_sampler(dist, m, seed, |i, s| {
        match aperture_transmittance_checked(s, aperture, tolerance) {
            Ok(checked) => Ok(checked.eta),
            Err(Error::QuadratureAccuracy {
                estimate,
                tolerance,
                context,
            }) => Err(Error::QuadratureAccuracy {
                estimate,
                tolerance,
                context: format!("sample {i}: {context}"),
            }),
            Err(other) => Err(other),
        }
    })?;
    TransmittanceDistribution::from_samples(&etas, n_bins)
}

/// PDT for a complete scenario under the given weather: resolves the
/// slant geometry, beam moments and sampling distribution, then runs the
/// Monte-Carlo reconstruction.
pub fn scenario_pdt(
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    m: usize,
    n_bins: usize,
    seed: u64,
) -> Result<TransmittanceDistribution> {
    let geometry = scenario.slant_geometry(weather)?;
    let moments = crate::beam::beam_moments(scenario, weather, &geometry)?;
    let dist = crate::beam::build_distribution(&moments, scenario.w0)?;
    let aperture = ApertureSpec::new(scenario.receiver_radius, geometry.chi_ext)?;
    sample_pdt(&dist, &aperture, m, n_bins, seed)
}

/// One row of a zenith sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    /// Zenith angle (rad).
    pub zenith: f64,
    /// Full PDT reconstructed at this angle.
    pub pdt: TransmittanceDistribution,
}

/// Mean transmittance as a function of zenith angle.
///
/// Runs one PDT per grid point with `m` samples each. All points share
/// the same base seed, so the same sample index reuses the same
/// underlying random draws at every angle (common random numbers): the
/// Monte-Carlo noise largely cancels in differences between angles,
/// which sharpens monotonicity comparisons at fixed cost.
pub fn sweep_mean_transmittance(
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    zeniths: &[f64],
    m: usize,
    n_bins: usize,
    seed: u64,
) -> Result<Vec<SweepPoint>> {
    zeniths
        .iter()
        .map(|&zenith| {
            let point = scenario.clone().with_zenith(zenith);
            let pdt = scenario_pdt(&point, weather, m, n_bins, seed)?;
            Ok(SweepPoint { zenith, pdt })
        })
        .collect()
}
