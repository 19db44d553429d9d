//! Transmittance of one elliptic-beam realization through a circular
//! receiving aperture.
//!
//! In polar coordinates rotated so the beam centroid lies on the positive
//! x-axis at distance r₀ = |(x₀, y₀)|, the collected fraction is
//!
//! ```text
//! η = (2 χ_ext / (π W₁ W₂)) ∫₀^a ρ dρ ∫ dθ
//!       exp[ −2A₁(ρ cos θ − r₀)² − 2A₂ ρ² sin²θ − 2A₃ (ρ cos θ − r₀) ρ sin θ ]
//!
//! A₁ = cos²φ/W₁² + sin²φ/W₂²
//! A₂ = sin²φ/W₁² + cos²φ/W₂²
//! A₃ = (1/W₁² − 1/W₂²) sin 2φ ,   φ = φ₀ − θ₀
//! ```
//!
//! where θ₀ is the centroid azimuth in the original frame. The kernel is
//! evaluated with a tensor Gauss–Legendre rule restricted to the support
//! window where the Gaussian is non-negligible (within 10 beam radii of
//! the centroid), which keeps fixed, modest orders accurate to ~1e−13
//! across the full operating range of shapes and offsets.

use crate::beam::BeamSample;
use crate::error::{Error, Result};
use crate::quadrature::{rule_128, rule_256, rule_512, rule_64, GaussLegendre};
use serde::{Deserialize, Serialize};

/// Receiving aperture: radius plus the extinction prefactor applied to
/// every transmittance it produces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApertureSpec {
    /// Aperture radius a (m).
    pub radius: f64,
    /// Extinction transmittance χ_ext ∈ (0, 1].
    pub chi_ext: f64,
}

impl ApertureSpec {
    pub fn new(radius: f64, chi_ext: f64) -> Result<Self> {
        if radius <= 0.0 {
            return Err(Error::NonPositive {
                name: "aperture radius",
                value: radius,
            });
        }
        if !(chi_ext > 0.0 && chi_ext <= 1.0) {
            return Err(Error::ProbabilityRange {
                name: "chi_ext",
                value: chi_ext,
            });
        }
        Ok(Self { radius, chi_ext })
    }
}

/// Transmittance of a centered circular Gaussian beam of spot size `w`
/// through an aperture of radius `a`: χ·(1 − e^(−2a²/W²)).
pub fn analytic_centered(w: f64, a: f64, chi: f64) -> f64 {
    chi * (1.0 - (-2.0 * a * a / (w * w)).exp())
}

/// Beam-shape constants of the quadratic form in the exponent, plus the
/// rotated-frame geometry.
struct Kernel {
    a1: f64,
    a2: f64,
    a3: f64,
    r0: f64,
    prefactor: f64,
}

impl Kernel {
    fn new(sample: &BeamSample, chi_ext: f64) -> Self {
        let r0 = sample.x0.hypot(sample.y0);
        let theta0 = if r0 > 0.0 {
            sample.y0.atan2(sample.x0)
        } else {
            0.0
        };
        let phi = sample.phi0 - theta0;
        let (sin_phi, cos_phi) = phi.sin_cos();
        let (s2, c2) = (sin_phi * sin_phi, cos_phi * cos_phi);
        let (iw1, iw2) = (
            1.0 / (sample.w1 * sample.w1),
            1.0 / (sample.w2 * sample.w2),
        );
        Kernel {
            a1: c2 * iw1 + s2 * iw2,
            a2: s2 * iw1 + c2 * iw2,
            a3: (iw1 - iw2) * (2.0 * phi).sin(),
            r0,
            prefactor: 2.0 * chi_ext / (std::f64::consts::PI * sample.w1 * sample.w2),
        }
    }
}

/// Multiple of max(W₁, W₂) beyond which the Gaussian is treated as zero.
/// At 10 beam radii the neglected intensity is below e^(−200).
const SUPPORT_RADII: f64 = 10.0;

/// Tensor-rule evaluation over the support window.
fn integrate(
    kernel: &Kernel,
    aperture_radius: f64,
    support: f64,
    radial: &GaussLegendre,
    angular: &GaussLegendre,
) -> f64 {
    let r0 = kernel.r0;
    let rho_lo = (r0 - support).max(0.0);
    let rho_hi = (r0 + support).min(aperture_radius);
    if rho_lo >= rho_hi {
        return 0.0;
    }
    // the beam disk subtends half-angle asin(support/r0) from the
    // aperture center once the centroid is outside it; for the full
    // circle, integrate [0, 2π] so the beam peak at θ = 0 falls on the
    // node-dense interval ends rather than the sparse center
    let (theta_lo, theta_hi) = if r0 <= support {
        (0.0, 2.0 * std::f64::consts::PI)
    } else {
        let half = (support / r0).asin();
        (-half, half)
    };

    let mid_r = 0.5 * (rho_lo + rho_hi);
    let half_r = 0.5 * (rho_hi - rho_lo);
    let mid_t = 0.5 * (theta_lo + theta_hi);
    let half_t = 0.5 * (theta_hi - theta_lo);
    let trig: Vec<(f64, f64, f64)> = angular
        .nodes
        .iter()
        .zip(&angular.weights)
        .map(|(&t, &w)| {
            let (sin_t, cos_t) = (mid_t + half_t * t).sin_cos();
            (cos_t, sin_t, w)
        })
        .collect();

    let mut total = 0.0;
    for (&xr, &wr) in radial.nodes.iter().zip(&radial.weights) {
        let rho = mid_r + half_r * xr;
        let mut inner = 0.0;
        for &(cos_t, sin_t, wt) in &trig {
            let dx = rho * cos_t - r0;
            let s = rho * sin_t;
            inner += wt
                * (-2.0 * (kernel.a1 * dx * dx + kernel.a2 * s * s + kernel.a3 * dx * s)).exp();
        }
        total += wr * rho * inner;
    }
    total * half_r * half_t * kernel.prefactor
}

/// Orders used for one evaluation, picked from the beam shape: extreme
/// aspect ratios or far-offset beams concentrate the integrand and get
/// the doubled rule.
fn pick_rules(sample: &BeamSample, aperture: &ApertureSpec) -> (&'static GaussLegendre, &'static GaussLegendre) {
    let aspect = (sample.w1 / sample.w2).max(sample.w2 / sample.w1);
    let offset = sample.x0.hypot(sample.y0) / aperture.radius;
    if aspect > 20.0 || offset > 5.0 {
        (rule_128(), rule_256())
    } else {
        (rule_64(), rule_128())
    }
}

/// Transmittance η ∈ [0, χ_ext] of one beam realization.
///
/// Total function on valid samples (W₁, W₂ > 0): fixed-order quadrature
/// validated to ~1e−13 over the operating range, with automatic order
/// doubling for extreme aspect ratios (W₁/W₂ > 20) or offsets
/// (r₀ > 5a), and an exact-zero short circuit once the centroid is more
/// than 10·max(W₁, W₂) beyond the aperture edge. Use
/// [`aperture_transmittance_checked`] when a per-call accuracy estimate
/// must be enforced.
pub fn aperture_transmittance(sample: &BeamSample, aperture: &ApertureSpec) -> f64 {
    let kernel = Kernel::new(sample, aperture.chi_ext);
    let support = SUPPORT_RADII * sample.w1.max(sample.w2);
    if kernel.r0 > support + aperture.radius {
        return 0.0;
    }
    let (radial, angular) = pick_rules(sample, aperture);
    integrate(&kernel, aperture.radius, support, radial, angular)
        .clamp(0.0, aperture.chi_ext)
}

/// Transmittance together with an order-doubling accuracy estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckedTransmittance {
    /// Transmittance at the doubled quadrature order.
    pub eta: f64,
    /// |η(doubled) − η(base)|: an estimate of the remaining quadrature
    /// error.
    pub error_estimate: f64,
}

/// Transmittance with an enforced accuracy estimate.
///
/// Evaluates the kernel at the base and doubled orders; if the estimate
/// |η₂ − η₁| exceeds `tolerance`, the failure is reported rather than
/// silently accepted.
pub fn aperture_transmittance_checked(
    sample: &BeamSample,
    aperture: &ApertureSpec,
    tolerance: f64,
) -> Result<CheckedTransmittance> {
    let kernel = Kernel::new(sample, aperture.chi_ext);
    let support = SUPPORT_RADII * sample.w1.max(sample.w2);
    if kernel.r0 > support + aperture.radius {
        return Ok(CheckedTransmittance {
            eta: 0.0,
            error_estimate: 0.0,
        });
    }
    let (radial, angular) = pick_rules(sample, aperture);
    let base = integrate(&kernel, aperture.radius, support, radial, angular);
    let (radial2, angular2) = if radial.nodes.len() == 64 {
        (rule_128(), rule_256())
    } else {
        (rule_256(), rule_512())
    };
    let refined = integrate(&kernel, aperture.radius, support, radial2, angular2);
    let error_estimate = (refined - base).abs();
    if error_estimate > tolerance {
        return Err(Error::QuadratureAccuracy {
            estimate: error_estimate,
            tolerance,
            context: format!(
                "beam W=({}, {}), centroid offset {}, aperture {}",
                sample.w1, sample.w2, kernel.r0, aperture.radius
            ),
        });
    }
    Ok(CheckedTransmittance {
        eta: refined.clamp(0.0, aperture.chi_ext),
        error_estimate,
    })
}
