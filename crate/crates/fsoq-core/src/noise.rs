//! Stray-light photon counting and the QBER model.
//!
//! Background photons entering the receiver during a detection window are
//! assumed unpolarized, so half of them land in the wrong detector:
//!
//! ```text
//! QBER = Q₀ + (1/2) · N_noise / (N_noise + N_sig)
//! ```
//!
//! with Q₀ the intrinsic (optics + electronics) error probability. The
//! expected stray count per window depends on the link direction:
//!
//! - **down-link** (ground receiver): diffuse sky radiance H_b collected
//!   over the aperture area, field of view, filter bandwidth and window:
//!   `N = (H_b/hν) · Ω_fov · π a² · B_f · Δt`;
//! - **up-link at night** (satellite receiver): sunlight reflected first
//!   by the Moon and then by the Earth:
//!   `N = A_E · A_M · R_M² · a² · (Ω_fov / d_EM²) · B_f · Δt · H_sun`;
//! - **up-link by day**: direct Earth-shine, the dominant term once the
//!   sunlit Earth fills the satellite's field of view:
//!   `N = A_E · H_sun · a² · Ω_fov · B_f · Δt`.
//!
//! The night up-link formula mixes the aperture radius and the field of
//! view without the π factor present in the down-link version; both are
//! implemented exactly as printed in their source. The day up-link
//! expression is our own minimal model (no published counterpart): the
//! Earth-albedo irradiance A_E·H_sun replaces the doubly-reflected chain,
//! with the same narrow daytime field of view and a 1 nm filter. Stray
//! counts are independent of the satellite position and therefore
//! constant across a pass.

use crate::error::{Error, Result};
use crate::geometry::LinkDirection;
use serde::{Deserialize, Serialize};

/// Planck constant (J s).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Speed of light (m/s).
pub const LIGHT_SPEED: f64 = 299_792_458.0;

/// Photon energy hν = hc/λ (J).
pub fn photon_energy(wavelength: f64) -> f64 {
    PLANCK * LIGHT_SPEED / wavelength
}

/// Stray-light environment for one sky condition and receiver setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEnvironment {
    /// Diffuse sky radiance H_b (W m⁻² sr⁻¹ nm⁻¹), down-link only.
    pub sky_radiance: f64,
    /// Solar spectral irradiance H_sun (photons s⁻¹ m⁻² nm⁻¹).
    pub solar_irradiance: f64,
    /// Earth albedo A_E.
    pub earth_albedo: f64,
    /// Moon albedo A_M.
    pub moon_albedo: f64,
    /// Moon radius R_M (m).
    pub moon_radius: f64,
    /// Earth–Moon distance d_EM (m).
    pub earth_moon_distance: f64,
    /// Receiver field of view Ω_fov (sr).
    pub field_of_view: f64,
    /// Spectral filter bandwidth B_f (nm).
    pub filter_bandwidth: f64,
    /// Detection time window Δt (s).
    pub time_window: f64,
    /// Intrinsic error probability Q₀.
    pub q0: f64,
    /// Day-time flag; selects the up-link stray source.
    pub daytime: bool,
}

impl NoiseEnvironment {
    /// Named sky presets, resolved per link direction.
    ///
    /// | preset           | H_b (down)                | Ω_fov         | B_f    |
    /// |------------------|---------------------------|---------------|--------|
    /// | `night-fullmoon` | 1.5e−6 W m⁻² sr⁻¹ nm⁻¹   | (100 µrad)² down, (10 µrad)² up | 1 nm |
    /// | `day-clear`      | 1.5e−3 W m⁻² sr⁻¹ nm⁻¹   | (10 µrad)²    | 0.2 nm down, 1 nm up |
    ///
    /// Shared constants: H_sun = 4.61e18 photons s⁻¹ m⁻² nm⁻¹,
    /// A_E = 0.3, A_M = 0.136, R_M = 1.737e6 m, d_EM = 3.6e8 m,
    /// Δt = 1 ns, Q₀ = 0.02.
    pub fn preset(name: &str, direction: LinkDirection) -> Option<Self> {
        let up = direction == LinkDirection::Uplink;
        let (sky_radiance, field_of_view, filter_bandwidth, daytime) = match name {
            "night-fullmoon" => {
                let fov = if up { 10e-6f64 } else { 100e-6 };
                (1.5e-6, fov * fov, 1.0, false)
            }
            "day-clear" => {
                let fov = 10e-6f64;
                (1.5e-3, fov * fov, if up { 1.0 } else { 0.2 }, true)
            }
            _ => return None,
        };
        Some(Self {
            sky_radiance,
            solar_irradiance: 4.61e18,
            earth_albedo: 0.3,
            moon_albedo: 0.136,
            moon_radius: 1.737e6,
            earth_moon_distance: 3.6e8,
            field_of_view,
            filter_bandwidth,
            time_window: 1e-9,
            q0: 0.02,
            daytime,
        })
    }

    /// All preset names accepted by [`Self::preset`].
    pub fn preset_names() -> &'static [&'static str] {
        &["night-fullmoon", "day-clear"]
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("sky_radiance", self.sky_radiance),
            ("solar_irradiance", self.solar_irradiance),
            ("earth_albedo", self.earth_albedo),
            ("moon_albedo", self.moon_albedo),
            ("moon_radius", self.moon_radius),
            ("earth_moon_distance", self.earth_moon_distance),
            ("field_of_view", self.field_of_view),
            ("filter_bandwidth", self.filter_bandwidth),
            ("time_window", self.time_window),
        ] {
            if value < 0.0 {
                return Err(Error::NonPositive { name, value });
            }
        }
        if !(0.0..=0.5).contains(&self.q0) {
            return Err(Error::ProbabilityRange {
                name: "q0",
                value: self.q0,
            });
        }
        Ok(())
    }

    /// Expected stray count per window for the given link direction and
    /// this environment's day/night phase.
    pub fn stray_photons(&self, direction: LinkDirection, a: f64, wavelength: f64) -> f64 {
        match direction {
            LinkDirection::Downlink => stray_photons_downlink(self, a, wavelength),
            LinkDirection::Uplink if self.daytime => stray_photons_uplink_day(self, a),
            LinkDirection::Uplink => stray_photons_uplink_night(self, a),
        }
    }
}

/// Stray photons per window at a ground receiver of radius `a`:
/// sky radiance over aperture area, field of view, filter and window.
pub fn stray_photons_downlink(env: &NoiseEnvironment, a: f64, wavelength: f64) -> f64 {
    env.sky_radiance / photon_energy(wavelength)
        * env.field_of_view
        * std::f64::consts::PI
        * a
        * a
        * env.filter_bandwidth
        * env.time_window
}

/// Stray photons per window at a satellite receiver at night: sunlight
/// reflected by the Moon and then by the Earth into the field of view.
pub fn stray_photons_uplink_night(env: &NoiseEnvironment, a: f64) -> f64 {
    env.earth_albedo
        * env.moon_albedo
        * env.moon_radius
        * env.moon_radius
        * a
        * a
        * (env.field_of_view / (env.earth_moon_distance * env.earth_moon_distance))
        * env.filter_bandwidth
        * env.time_window
        * env.solar_irradiance
}

/// Stray photons per window at a satellite receiver by day: direct
/// Earth-shine (sunlit Earth filling the field of view).
pub fn stray_photons_uplink_day(env: &NoiseEnvironment, a: f64) -> f64 {
    env.earth_albedo
        * env.solar_irradiance
        * a
        * a
        * env.field_of_view
        * env.filter_bandwidth
        * env.time_window
}

/// Quantum bit error rate from unpolarized stray light:
/// `Q₀ + (1/2)·N_noise/(N_noise + N_sig)`.
///
/// Undefined when both expectations vanish (nothing arrives at all);
/// that is reported as a no-signal condition.
pub fn qber(n_noise: f64, n_sig: f64, q0: f64) -> Result<f64> {
    if n_noise < 0.0 || n_sig < 0.0 {
        return Err(Error::NonPositive {
            name: "photon expectation",
            value: n_noise.min(n_sig),
        });
    }
    if n_noise + n_sig == 0.0 {
        return Err(Error::NoSignal);
    }
    Ok(q0 + 0.5 * n_noise / (n_noise + n_sig))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn night_up() -> NoiseEnvironment {
        NoiseEnvironment::preset("night-fullmoon", LinkDirection::Uplink).unwrap()
    }

    fn night_down() -> NoiseEnvironment {
        NoiseEnvironment::preset("night-fullmoon", LinkDirection::Downlink).unwrap()
    }

    fn day_down() -> NoiseEnvironment {
        NoiseEnvironment::preset("day-clear", LinkDirection::Downlink).unwrap()
    }

    #[test]
    fn photon_energy_at_standard_wavelength() {
        assert_relative_eq!(
            photon_energy(785e-9),
            2.530_504_276_622_839e-19,
            max_relative = 1e-15
        );
    }

    #[test]
    fn presets_resolve_direction_specific_optics() {
        let nd = night_down();
        let nu = night_up();
        assert_eq!(nd.field_of_view, 100e-6 * 100e-6);
        assert_eq!(nu.field_of_view, 10e-6 * 10e-6, "satellite keeps a narrow FOV");
        assert_eq!(nd.filter_bandwidth, 1.0);
        let dd = day_down();
        assert_eq!(dd.field_of_view, 10e-6 * 10e-6);
        assert_eq!(dd.filter_bandwidth, 0.2, "daytime needs the tighter filter");
        assert!(dd.daytime && !nd.daytime);
        for env in [nd, nu, dd] {
            env.validate().unwrap();
            assert_eq!(env.q0, 0.02);
            assert_eq!(env.time_window, 1e-9);
        }
        assert!(NoiseEnvironment::preset("dusk", LinkDirection::Uplink).is_none());
    }

    #[test]
    fn downlink_counts_match_frozen_references() {
        // independent calculator oracle, a = 0.5 m, 785 nm
        assert_relative_eq!(
            stray_photons_downlink(&night_down(), 0.5, 785e-9),
            4.655_582_904_876_327e-5,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            stray_photons_downlink(&day_down(), 0.5, 785e-9),
            9.311_165_809_752_657e-5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn uplink_counts_match_frozen_references() {
        // Moon/Earth-shine chain at the satellite, a = 0.15 m
        assert_relative_eq!(
            stray_photons_uplink_night(&night_up(), 0.15),
            9.852_313_938_75e-9,
            max_relative = 1e-12
        );
        // daytime Earth-shine dwarfs it by over five decades
        let day_up = NoiseEnvironment::preset("day-clear", LinkDirection::Uplink).unwrap();
        assert_relative_eq!(
            stray_photons_uplink_day(&day_up, 0.15),
            3.111_75e-3,
            max_relative = 1e-12
        );
    }

    #[test]
    fn zeroed_drivers_produce_zero_counts() {
        let mut env = night_down();
        env.filter_bandwidth = 0.0;
        assert_eq!(stray_photons_downlink(&env, 0.5, 785e-9), 0.0);
        let mut env = night_up();
        env.earth_albedo = 0.0;
        assert_eq!(stray_photons_uplink_night(&env, 0.15), 0.0);
        assert_eq!(stray_photons_uplink_day(&env, 0.15), 0.0);
    }

    #[test]
    fn counts_scale_linearly_in_each_driver() {
        let base = night_down();
        let reference = stray_photons_downlink(&base, 0.5, 785e-9);
        for field in ["bandwidth", "window", "fov"] {
            let mut doubled = base.clone();
            match field {
                "bandwidth" => doubled.filter_bandwidth *= 2.0,
                "window" => doubled.time_window *= 2.0,
                _ => doubled.field_of_view *= 2.0,
            }
            assert_relative_eq!(
                stray_photons_downlink(&doubled, 0.5, 785e-9),
                2.0 * reference,
                max_relative = 1e-15
            );
        }
        // aperture radius enters quadratically
        let up = night_up();
        assert_relative_eq!(
            stray_photons_uplink_night(&up, 0.30),
            4.0 * stray_photons_uplink_night(&up, 0.15),
            max_relative = 1e-15
        );
    }

    #[test]
    fn dispatch_selects_the_direction_and_phase_formula() {
        let nu = night_up();
        assert_eq!(
            nu.stray_photons(LinkDirection::Uplink, 0.15, 785e-9),
            stray_photons_uplink_night(&nu, 0.15)
        );
        let du = NoiseEnvironment::preset("day-clear", LinkDirection::Uplink).unwrap();
        assert_eq!(
            du.stray_photons(LinkDirection::Uplink, 0.15, 785e-9),
            stray_photons_uplink_day(&du, 0.15)
        );
        let nd = night_down();
        assert_eq!(
            nd.stray_photons(LinkDirection::Downlink, 0.5, 785e-9),
            stray_photons_downlink(&nd, 0.5, 785e-9)
        );
    }

    // ------------------------------------------------------------------
    // QBER
    // ------------------------------------------------------------------

    #[test]
    fn qber_reference_points() {
        assert_eq!(qber(0.0, 0.04, 0.02).unwrap(), 0.02, "no noise leaves Q0");
        assert_relative_eq!(qber(1e-3, 1e-3, 0.02).unwrap(), 0.27, max_relative = 1e-15);
        // single-photon pulse at eta = 0.1 with standard receiver
        // efficiencies (0.5 detector, 0.8 optics) under the night sky
        let n_sig = 0.1 * 0.5 * 0.8;
        let q = qber(4.655_582_904_876_327e-5, n_sig, 0.02).unwrap();
        assert_relative_eq!(q, 0.020_581_271_323_899_88, max_relative = 1e-12);
    }

    #[test]
    fn qber_is_monotone_and_bounded() {
        let mut prev = 0.0;
        for i in 1..=10 {
            let n = i as f64 * 1e-4;
            let q = qber(n, 0.04, 0.02).unwrap();
            assert!(q > prev, "QBER must rise with noise");
            assert!((0.02..=0.52).contains(&q));
            prev = q;
        }
        let less_signal = qber(1e-4, 0.01, 0.02).unwrap();
        let more_signal = qber(1e-4, 0.04, 0.02).unwrap();
        assert!(less_signal > more_signal, "QBER must fall with signal");
    }

    #[test]
    fn vanishing_link_is_a_no_signal_condition() {
        assert!(matches!(qber(0.0, 0.0, 0.02), Err(Error::NoSignal)));
        assert!(qber(-1.0, 0.1, 0.02).is_err());
    }
}
