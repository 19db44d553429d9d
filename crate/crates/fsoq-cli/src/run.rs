//! End-to-end scenario execution: sweep the zenith grid, reconstruct a
//! transmittance distribution at every angle, evaluate the requested
//! key-rate protocols against it, and write the artifact set.

use crate::config::RunConfig;
use crate::output;
use anyhow::{anyhow, Context, Result};
use fsoq_core::geometry::{LinkScenario, WeatherCondition};
use fsoq_core::noise::NoiseEnvironment;
use fsoq_core::pdt::{scenario_pdt, TransmittanceDistribution};
use fsoq_core::rates::{
    optimize_rate, pdt_averaged_rate, DetectionModel, KeyRateResult, ProtocolParams,
};
use rayon::prelude::*;
use std::path::PathBuf;

/// Everything computed at one zenith angle.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub zenith_deg: f64,
    /// Slant path length transmitter → receiver (m).
    pub slant_length_m: f64,
    /// Turbulent-atmosphere portion of the path (m).
    pub atmo_path_m: f64,
    pub pdt: TransmittanceDistribution,
    pub sp: Option<KeyRateResult>,
    pub wcp: Option<KeyRateResult>,
}

/// A completed run: per-point results plus the paths written.
#[derive(Debug)]
pub struct RunOutput {
    pub points: Vec<PointResult>,
    pub summary_path: PathBuf,
    pub manifest_path: PathBuf,
}

/// Resolve the preset names of a config into concrete model inputs.
/// The noise preset follows the weather's day/night flag.
pub fn resolve_models(
    config: &RunConfig,
) -> Result<(LinkScenario, WeatherCondition, NoiseEnvironment, &'static str)> {
    let scenario = LinkScenario::preset(&config.preset)
        .ok_or_else(|| anyhow!("unknown scenario preset {:?}", config.preset))?;
    let weather = WeatherCondition::preset(&config.weather)
        .ok_or_else(|| anyhow!("unknown weather preset {:?}", config.weather))?;
    let noise_name = if weather.daytime {
        "day-clear"
    } else {
        "night-fullmoon"
    };
    let noise = NoiseEnvironment::preset(noise_name, scenario.direction)
        .ok_or_else(|| anyhow!("unknown noise preset {:?}", noise_name))?;
    Ok((scenario, weather, noise, noise_name))
}

/// Protocol parameter sets implied by the config (direction-dependent
/// defaults, then the block / epsilon overrides).
pub fn resolve_protocols(
    config: &RunConfig,
    scenario: &LinkScenario,
) -> (Option<ProtocolParams>, Option<ProtocolParams>) {
    let apply = |mut params: ProtocolParams| {
        if let Some(block) = config.block {
            params = match params.variant {
                fsoq_core::rates::ProtocolVariant::SinglePhoton { .. } => {
                    ProtocolParams::single_photon(block)
                }
                fsoq_core::rates::ProtocolVariant::DecoyWcp { .. } => {
                    ProtocolParams::decoy_wcp(block)
                }
            };
        }
        params.eps_sec = config.eps_sec;
        params.eps_cor = config.eps_cor;
        params
    };
    let sp = config
        .protocol
        .includes_sp()
        .then(|| apply(ProtocolParams::default_single_photon(scenario.direction)));
    let wcp = config
        .protocol
        .includes_wcp()
        .then(|| apply(ProtocolParams::default_decoy_wcp(scenario.direction)));
    (sp, wcp)
}

fn rate_for(
    pdt: &TransmittanceDistribution,
    params: &ProtocolParams,
    model: &DetectionModel,
    optimize: bool,
) -> fsoq_core::Result<KeyRateResult> {
    if optimize {
        optimize_rate(pdt, params, model)
    } else {
        pdt_averaged_rate(pdt, params, model)
    }
}

/// Compute one sweep point. Every point uses the same base seed (common
/// random numbers), so angle-to-angle differences are not polluted by
/// independent Monte-Carlo noise.
pub fn compute_point(
    zenith_deg: f64,
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    model: &DetectionModel,
    sp_params: Option<&ProtocolParams>,
    wcp_params: Option<&ProtocolParams>,
    config: &RunConfig,
) -> Result<PointResult> {
    let at_angle = scenario.clone().with_zenith(zenith_deg.to_radians());
    let geometry = at_angle
        .slant_geometry(weather)
        .with_context(|| format!("slant geometry at {zenith_deg} deg"))?;
    let pdt = scenario_pdt(&at_angle, weather, config.samples, config.bins, config.seed)
        .with_context(|| format!("transmittance distribution at {zenith_deg} deg"))?;
    let sp = sp_params
        .map(|p| rate_for(&pdt, p, model, config.optimize))
        .transpose()
        .with_context(|| format!("single-photon rate at {zenith_deg} deg"))?;
    let wcp = wcp_params
        .map(|p| rate_for(&pdt, p, model, config.optimize))
        .transpose()
        .with_context(|| format!("decoy-state rate at {zenith_deg} deg"))?;
    Ok(PointResult {
        zenith_deg,
        slant_length_m: geometry.l,
        atmo_path_m: geometry.h,
        pdt,
        sp,
        wcp,
    })
}

/// Execute a resolved config and write pdt_point_NNN.csv, summary.csv and
/// manifest.txt under its output directory.
pub fn run_scenario(config: &RunConfig) -> Result<RunOutput> {
    let (scenario, weather, noise, noise_name) = resolve_models(config)?;
    let model = DetectionModel::from_scenario(&scenario, &noise)
        .context("detection model from scenario")?;
    let (sp_params, wcp_params) = resolve_protocols(config, &scenario);

    let points: Vec<PointResult> = config
        .sweep_deg
        .par_iter()
        .map(|&deg| {
            compute_point(
                deg,
                &scenario,
                &weather,
                &model,
                sp_params.as_ref(),
                wcp_params.as_ref(),
                config,
            )
        })
        .collect::<Result<_>>()?;

    std::fs::create_dir_all(&config.out)
        .with_context(|| format!("cannot create output directory {}", config.out.display()))?;
    for (i, point) in points.iter().enumerate() {
        let path = config.out.join(output::pdt_file_name(i));
        output::write_text(&path, &output::render_pdt_csv(&point.pdt, point.zenith_deg))?;
    }
    let summary_path = config.out.join("summary.csv");
    output::write_text(&summary_path, &output::render_summary_csv(&points))?;
    let manifest_path = config.out.join("manifest.txt");
    output::write_text(
        &manifest_path,
        &output::render_manifest(
            config,
            &scenario,
            &weather,
            noise_name,
            sp_params.as_ref(),
            wcp_params.as_ref(),
        ),
    )?;
    Ok(RunOutput {
        points,
        summary_path,
        manifest_path,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RawConfig;

    fn tiny_config(dir: &std::path::Path) -> RunConfig {
        let raw = RawConfig {
            preset: Some("micius-down".into()),
            weather: Some("night1".into()),
            sweep: Some("0:60:30".into()),
            samples: Some(60),
            bins: Some(40),
            seed: Some(11),
            out: Some(dir.join("run")),
            ..RawConfig::default()
        };
        raw.resolve().unwrap()
    }

    #[test]
    fn run_writes_expected_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let output = run_scenario(&config).unwrap();
        assert_eq!(output.points.len(), 3);
        assert!(output.summary_path.is_file());
        assert!(output.manifest_path.is_file());
        for i in 0..3 {
            assert!(config.out.join(output::pdt_file_name(i)).is_file());
        }
        let summary = std::fs::read_to_string(&output.summary_path).unwrap();
        assert_eq!(summary.lines().count(), 2 + 3, "version, header, 3 rows");
        for point in &output.points {
            assert!(point.sp.is_some() && point.wcp.is_some());
            assert!(point.pdt.mean_eta > 0.0);
        }
    }

    #[test]
    fn manifest_replays_to_the_same_config() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let output = run_scenario(&config).unwrap();
        let replayed = RawConfig::from_file(&output.manifest_path)
            .unwrap()
            .resolve()
            .unwrap();
        assert_eq!(replayed.preset, config.preset);
        assert_eq!(replayed.sweep_deg, config.sweep_deg);
        assert_eq!(replayed.samples, config.samples);
        assert_eq!(replayed.seed, config.seed);
        assert_eq!(replayed.eps_sec, config.eps_sec);
    }

    #[test]
    fn single_protocol_leaves_other_column_empty() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = tiny_config(dir.path());
        config.protocol = crate::config::ProtocolChoice::Sp;
        config.sweep_deg = vec![0.0];
        let output = run_scenario(&config).unwrap();
        let point = &output.points[0];
        assert!(point.sp.is_some() && point.wcp.is_none());
        let row = output::render_summary_row(point);
        // rate_wcp and the seven WCP parameter fields must be empty.
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 16);
        assert!(!fields[5].is_empty(), "rate_sp populated");
        assert!(fields[6].is_empty(), "rate_wcp empty");
        for field in &fields[9..16] {
            assert!(field.is_empty());
        }
    }
}
