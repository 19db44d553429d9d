//! First and second moments of the elliptic-beam parameter vector and the
//! joint sampling distribution built from them.
//!
//! A single atmospheric realization of the beam at the receiver plane is
//! described by five parameters: the centroid (x₀, y₀), the squared
//! semi-axes (W₁², W₂²), and the ellipse orientation φ₀. The statistics
//! are closed-form functions of the link geometry and weather:
//!
//! - Rytov variance σ_R² = 1.23 C_n² k^(7/6) L^(11/6),
//! - Fresnel number Ω = k W₀² / (2L),
//! - direction-specific moment formulas for ⟨x₀²⟩, ⟨W_i²⟩ and
//!   ⟨ΔW_i² ΔW_j²⟩ (up-link turbulence acts at the transmitter, down-link
//!   at the receiver, giving different powers of the atmosphere fraction
//!   h/L),
//! - a log-normal moment match that converts the W²-moments into the
//!   Gaussian moments of Θ_i = ln(W_i²/W₀²).
//!
//! The resulting joint law is Gaussian in (x₀, y₀, Θ₁, Θ₂) —
//! block-diagonal between the centroid and log-size pairs — with φ₀
//! independent and uniform on [0, π/2].

use crate::error::{Error, Result};
use crate::geometry::{LinkDirection, LinkScenario, SlantGeometry, WeatherCondition};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// Rytov variance σ_R² = 1.23 · C_n² · k^(7/6) · L^(11/6).
pub fn rytov_variance(cn2: f64, wavenumber: f64, path_length: f64) -> f64 {
    1.23 * cn2 * wavenumber.powf(7.0 / 6.0) * path_length.powf(11.0 / 6.0)
}

/// Fresnel number Ω = k · W₀² / (2L).
pub fn fresnel_number(wavenumber: f64, w0: f64, path_length: f64) -> f64 {
    wavenumber * w0 * w0 / (2.0 * path_length)
}

/// Second moments of the elliptic-beam parameters for one link
/// configuration.
///
/// By symmetry ⟨x₀²⟩ = ⟨y₀²⟩ and ⟨W₁²⟩ = ⟨W₂²⟩, so scalars suffice for
/// those; the W²-covariance keeps its full 2×2 form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamMoments {
    /// Centroid variance ⟨x₀²⟩ = ⟨y₀²⟩ (m²).
    pub var_x0: f64,
    /// Mean squared semi-axis ⟨W_i²⟩ (m²), equal for i = 1, 2.
    pub mean_w2: f64,
    /// Covariance ⟨ΔW_i² ΔW_j²⟩ (m⁴).
    pub cov_w2: [[f64; 2]; 2],
    /// Rytov variance σ_R² (dimensionless).
    pub rytov: f64,
    /// Fresnel number Ω (dimensionless).
    pub fresnel: f64,
}

fn validate_inputs(
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    geometry: &SlantGeometry,
) -> Result<()> {
    scenario.validate()?;
    weather.validate()?;
    for (name, value) in [("path length L", geometry.l), ("slab path h", geometry.h)] {
        if value <= 0.0 {
            return Err(Error::NonPositive { name, value });
        }
    }
    Ok(())
}

/// W²-covariance with the common correlation structure (2δ_ij − 0.8)·base,
/// i.e. diagonal 1.2·base and off-diagonal −0.8·base.
fn correlated_cov(base: f64) -> [[f64; 2]; 2] {
    [[1.2 * base, -0.8 * base], [-0.8 * base, 1.2 * base]]
}

/// Beam moments for a ground→satellite link.
///
/// Turbulence and scattering act right after the transmitter, so beam
/// wander and broadening pick up only a single power of the atmosphere
/// fraction h/L:
///
/// ```text
/// ⟨x₀²⟩   = 0.419 σ_R² W₀² Ω^(−7/6) (h/L)
/// ⟨W_i²⟩  = (W₀²/Ω²) (S + 2.6 σ_R² Ω^(5/6) (h/L))
/// cov_ij  = (2δ_ij − 0.8) (W₀⁴/Ω^(19/6)) S σ_R² (h/L)
/// S       = 1 + (π/8) L n₀ W₀² (h/L)
/// ```
pub fn moments_uplink(
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    geometry: &SlantGeometry,
) -> Result<BeamMoments> {
    validate_inputs(scenario, weather, geometry)?;
    let (w0, l) = (scenario.w0, geometry.l);
    let frac = geometry.h / l;
    let k = scenario.wavenumber();
    let rytov = rytov_variance(weather.cn2, k, l);
    let fresnel = fresnel_number(k, w0, l);
    let w0sq = w0 * w0;

    let scatter = 1.0 + std::f64::consts::FRAC_PI_8 * l * weather.n0 * w0sq * frac;
    let var_x0 = 0.419 * rytov * w0sq * fresnel.powf(-7.0 / 6.0) * frac;
    let mean_w2 =
        w0sq / (fresnel * fresnel) * (scatter + 2.6 * rytov * fresnel.powf(5.0 / 6.0) * frac);
    let base = w0sq * w0sq / fresnel.powf(19.0 / 6.0) * scatter * rytov * frac;

    Ok(BeamMoments {
        var_x0,
        mean_w2,
        cov_w2: correlated_cov(base),
        rytov,
        fresnel,
    })
}

/// Beam moments for a satellite→ground link.
///
/// The beam expands in vacuum before meeting the atmosphere, so
/// turbulence-induced broadening is suppressed by higher powers of h/L
/// and centroid wander is dominated by transmitter pointing jitter α:
///
/// ```text
/// ⟨x₀²⟩   = (α L)²
/// ⟨W_i²⟩  = (W₀²/Ω²) (S + 1.6 σ_R² Ω^(5/6) (h/L)^(8/3))
/// cov_ij  = (2δ_ij − 0.8) (3/8) (W₀⁴/Ω^(19/6)) S σ_R² (h/L)^(8/3)
/// S       = 1 + (π/24) L n₀ W₀² (h/L)³
/// ```
pub fn moments_downlink(
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    geometry: &SlantGeometry,
) -> Result<BeamMoments> {
    validate_inputs(scenario, weather, geometry)?;
    let (w0, l) = (scenario.w0, geometry.l);
    let frac = geometry.h / l;
    let k = scenario.wavenumber();
    let rytov = rytov_variance(weather.cn2, k, l);
    let fresnel = fresnel_number(k, w0, l);
    let w0sq = w0 * w0;

    let scatter = 1.0 + std::f64::consts::PI / 24.0 * l * weather.n0 * w0sq * frac.powi(3);
    let wander = scenario.pointing_error * l;
    let var_x0 = wander * wander;
    let mean_w2 = w0sq / (fresnel * fresnel)
        * (scatter + 1.6 * rytov * fresnel.powf(5.0 / 6.0) * frac.powf(8.0 / 3.0));
    let base =
        0.375 * w0sq * w0sq / fresnel.powf(19.0 / 6.0) * scatter * rytov * frac.powf(8.0 / 3.0);

    Ok(BeamMoments {
        var_x0,
        mean_w2,
        cov_w2: correlated_cov(base),
        rytov,
        fresnel,
    })
}

/// Moments for the scenario's own direction.
pub fn beam_moments(
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    geometry: &SlantGeometry,
) -> Result<BeamMoments> {
    match scenario.direction {
        LinkDirection::Uplink => moments_uplink(scenario, weather, geometry),
        LinkDirection::Downlink => moments_downlink(scenario, weather, geometry),
    }
}

/// Match a log-normal law to the W²-moments: with m = ⟨W²⟩/W₀² and
/// v_ij = cov_ij/W₀⁴,
///
/// ```text
/// ⟨Θ_i⟩     = ln( m² / sqrt(v_ii + m²) )
/// cov_Θ[ij] = ln( 1 + cov_ij / ⟨W²⟩² )
/// ```
///
/// so that W_i² = W₀² e^(Θ_i) reproduces ⟨W²⟩ and cov exactly.
pub fn lognormal_match(mean_w2: f64, cov_w2: [[f64; 2]; 2], w0: f64) -> Result<([f64; 2], [[f64; 2]; 2])> {
    if mean_w2 <= 0.0 {
        return Err(Error::NonPositive {
            name: "mean_w2",
            value: mean_w2,
        });
    }
    if w0 <= 0.0 {
        return Err(Error::NonPositive { name: "w0", value: w0 });
    }
    let w0sq = w0 * w0;
    let m = mean_w2 / w0sq;
    let mut mean_theta = [0.0; 2];
    let mut cov_theta = [[0.0; 2]; 2];
    for i in 0..2 {
        let v = cov_w2[i][i] / (w0sq * w0sq);
        let arg = v + m * m;
        if arg <= 0.0 {
            return Err(Error::CovarianceInvalid {
                detail: format!("variance ratio {v} incompatible with mean ratio {m}"),
            });
        }
        mean_theta[i] = (m * m / arg.sqrt()).ln();
        for j in 0..2 {
            let rel = 1.0 + cov_w2[i][j] / (mean_w2 * mean_w2);
            if rel <= 0.0 {
                return Err(Error::CovarianceInvalid {
                    detail: format!(
                        "log of non-positive relative second moment {rel} at ({i},{j})"
                    ),
                });
            }
            cov_theta[i][j] = rel.ln();
        }
    }
    Ok((mean_theta, cov_theta))
}

/// Floor the eigenvalues of a symmetric 2×2 matrix at zero.
///
/// Returns the repaired matrix and the relative magnitude of the floored
/// (negative) eigenvalue, 0 when no repair was needed. Rejects matrices
/// whose negative eigenvalue is structural (beyond rounding scale,
/// relative magnitude > 1e−9) rather than silently repairing them.
pub fn floor_psd_2x2(m: [[f64; 2]; 2]) -> Result<([[f64; 2]; 2], f64)> {
    let (a, b) = (m[0][0], m[1][1]);
    let c = 0.5 * (m[0][1] + m[1][0]);
    let mid = 0.5 * (a + b);
    let radius = (0.25 * (a - b) * (a - b) + c * c).sqrt();
    let (lo, hi) = (mid - radius, mid + radius);
    if lo >= 0.0 {
        return Ok(([[a, c], [c, b]], 0.0));
    }
    let scale = hi.abs().max(1.0);
    let rel = -lo / scale;
    if rel > 1e-9 {
        return Err(Error::CovarianceInvalid {
            detail: format!("negative eigenvalue {lo} (relative {rel:.3e}) is not rounding noise"),
        });
    }
    // eigenvector for `hi`: (c, hi − a), or (1, 0) when the matrix is
    // already diagonal
    let (ex, ey) = if c == 0.0 {
        if a >= b {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        }
    } else {
        let norm = (c * c + (hi - a) * (hi - a)).sqrt();
        (c / norm, (hi - a) / norm)
    };
    let repaired = [
        [hi * ex * ex, hi * ex * ey],
        [hi * ex * ey, hi * ey * ey],
    ];
    Ok((repaired, rel))
}

/// Lower-triangular Cholesky factor (l11, l21, l22) of a PSD 2×2 matrix,
/// tolerating zero eigenvalues.
fn cholesky_2x2(m: [[f64; 2]; 2]) -> Result<[f64; 3]> {
    let l11 = m[0][0].max(0.0).sqrt();
    let l21 = if l11 > 0.0 { m[0][1] / l11 } else { 0.0 };
    let rem = m[1][1] - l21 * l21;
    if rem < -1e-12 * m[1][1].abs().max(1.0) {
        return Err(Error::CovarianceInvalid {
            detail: format!("Cholesky remainder {rem} negative beyond rounding"),
        });
    }
    Ok([l11, l21, rem.max(0.0).sqrt()])
}

/// One realized elliptic-beam state at the receiver plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamSample {
    /// Centroid coordinates (m).
    pub x0: f64,
    pub y0: f64,
    /// Semi-axes (m); positive by construction (W_i = W₀ e^(Θ_i/2)).
    pub w1: f64,
    pub w2: f64,
    /// Ellipse orientation (rad), uniform on [0, π/2].
    pub phi0: f64,
}

/// Joint sampling law of the beam parameters: Gaussian in
/// (x₀, y₀, Θ₁, Θ₂) with φ₀ independent and uniform on [0, π/2].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticBeamDistribution {
    /// Mean of (x₀, y₀, Θ₁, Θ₂).
    pub mean: [f64; 4],
    /// Covariance of (x₀, y₀, Θ₁, Θ₂); block-diagonal between the
    /// centroid pair and the log-size pair.
    pub cov: [[f64; 4]; 4],
    /// Transmitter waist W₀ (m); converts Θ back to semi-axes.
    pub w0: f64,
    /// Relative magnitude of the eigenvalue floor applied to the log-size
    /// block during construction (0 when the block was already PSD).
    pub psd_floor: f64,
    std_x0: f64,
    chol_theta: [f64; 3],
}

impl EllipticBeamDistribution {
    /// Draw one beam realization.
    ///
    /// Consumes exactly five variates in a fixed order — four standard
    /// normals (centroid x, centroid y, then the two log-size components
    /// through the Cholesky factor) and one uniform for φ₀ — so that a
    /// caller seeding per-sample RNG streams gets reproducible output
    /// regardless of how samples are distributed over workers.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> BeamSample {
        let nx: f64 = rng.sample(StandardNormal);
        let ny: f64 = rng.sample(StandardNormal);
        let nz1: f64 = rng.sample(StandardNormal);
        let nz2: f64 = rng.sample(StandardNormal);
        let u: f64 = rng.gen::<f64>();
        let [l11, l21, l22] = self.chol_theta;
        let theta1 = self.mean[2] + l11 * nz1;
        let theta2 = self.mean[3] + l21 * nz1 + l22 * nz2;
        BeamSample {
            x0: self.std_x0 * nx,
            y0: self.std_x0 * ny,
            w1: self.w0 * (0.5 * theta1).exp(),
            w2: self.w0 * (0.5 * theta2).exp(),
            phi0: u * std::f64::consts::FRAC_PI_2,
        }
    }
}

/// Assemble the joint sampling distribution from beam moments.
///
/// Applies the log-normal match to the W²-moments, floors rounding-level
/// negative eigenvalues of the resulting log-size covariance, and caches
/// the Cholesky factor used for sampling.
pub fn build_distribution(moments: &BeamMoments, w0: f64) -> Result<EllipticBeamDistribution> {
    if moments.var_x0 < 0.0 {
        return Err(Error::NonPositive {
            name: "var_x0",
            value: moments.var_x0,
        });
    }
    let (mean_theta, cov_theta) = lognormal_match(moments.mean_w2, moments.cov_w2, w0)?;
    let (cov_theta, psd_floor) = floor_psd_2x2(cov_theta)?;
    let chol_theta = cholesky_2x2(cov_theta)?;

    let mut cov = [[0.0; 4]; 4];
    cov[0][0] = moments.var_x0;
    cov[1][1] = moments.var_x0;
    for i in 0..2 {
        for j in 0..2 {
            cov[2 + i][2 + j] = cov_theta[i][j];
        }
    }
    Ok(EllipticBeamDistribution {
        mean: [0.0, 0.0, mean_theta[0], mean_theta[1]],
        cov,
        w0,
        psd_floor,
        std_x0: moments.var_x0.sqrt(),
        chol_theta,
    })
}
