//! Standard figure datasets: a fixed catalogue of CSV files (histograms,
//! weather sweeps, rate sweeps) covering the model's headline behaviors,
//! plus a manifest mapping each file to its catalogue entry.
//!
//! Every dataset is generated with a fixed seed, so the catalogue is
//! reproducible bit-for-bit.

use crate::config::{ProtocolChoice, RawConfig, RunConfig};
use crate::output::{self, write_text};
use crate::run::{compute_point, resolve_models, resolve_protocols, PointResult};
use anyhow::{Context, Result};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::Path;

/// Seed shared by every catalogue dataset.
const FIGURE_SEED: u64 = 1;
/// Samples per histogram dataset (overridable for smoke runs).
const HISTOGRAM_SAMPLES: usize = 10_000;
/// Samples per sweep point in the sweep and rate datasets.
const SWEEP_SAMPLES: usize = 1_000;
/// Zenith grid (degrees) of every sweep dataset.
const SWEEP_SPEC: &str = "0:80:5";
/// Histogram bins for down-link distributions (support spans most of
/// [0, 1]).
const DOWN_BINS: usize = 200;
/// Histogram bins for up-link distributions, whose support is a narrow
/// sliver near zero and needs a much finer grid to resolve.
const UP_BINS: usize = 20_000;

const NIGHT_WEATHERS: [&str; 3] = ["night1", "night2", "night3"];
const DAY_WEATHERS: [&str; 3] = ["day1", "day2", "day3"];

/// One manifest row.
#[derive(Debug, Clone)]
pub struct FigureEntry {
    pub file: String,
    /// Catalogue figure id ("-" for supplementary checks).
    pub figure: &'static str,
    pub description: String,
}

fn base_config(
    preset: &str,
    weather: &str,
    sweep: &str,
    samples: usize,
    bins: usize,
) -> Result<RunConfig> {
    RawConfig {
        preset: Some(preset.to_string()),
        weather: Some(weather.to_string()),
        sweep: Some(sweep.to_string()),
        samples: Some(samples),
        bins: Some(bins),
        seed: Some(FIGURE_SEED),
        ..RawConfig::default()
    }
    .resolve()
}

/// Sweep one scenario/weather pair over the standard grid, evaluating
/// the requested protocols at every point.
fn sweep_points(config: &RunConfig, protocol: ProtocolChoice) -> Result<Vec<PointResult>> {
    let (scenario, weather, noise, _name) = resolve_models(config)?;
    let model = fsoq_core::rates::DetectionModel::from_scenario(&scenario, &noise)
        .context("detection model")?;
    let mut config = config.clone();
    config.protocol = protocol;
    let (sp_params, wcp_params) = resolve_protocols(&config, &scenario);
    config
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
                &config,
            )
        })
        .collect()
}

/// Mean transmittance only (no rate evaluation) for the weather sweeps.
fn sweep_means(config: &RunConfig) -> Result<Vec<PointResult>> {
    let (scenario, weather, noise, _name) = resolve_models(config)?;
    let model = fsoq_core::rates::DetectionModel::from_scenario(&scenario, &noise)
        .context("detection model")?;
    config
        .sweep_deg
        .par_iter()
        .map(|&deg| compute_point(deg, &scenario, &weather, &model, None, None, config))
        .collect()
}

fn fmt(value: f64) -> String {
    if value.is_infinite() {
        (if value > 0.0 { "inf" } else { "-inf" }).to_string()
    } else {
        format!("{value}")
    }
}

/// Weather-sweep CSV: one mean-transmittance column per weather preset.
fn render_weather_sweep(preset: &str, samples: usize, columns: &[(String, Vec<PointResult>)]) -> String {
    let mut text = String::new();
    text.push_str("# fsoq weather sweep v1\n");
    let _ = writeln!(text, "# preset={preset} samples={samples} seed={FIGURE_SEED}");
    text.push_str("zenith_deg");
    for (weather, _) in columns {
        let _ = write!(text, ",mean_eta_{weather},mean_loss_db_{weather}");
    }
    text.push('\n');
    let grid = &columns[0].1;
    for (i, point) in grid.iter().enumerate() {
        let _ = write!(text, "{}", fmt(point.zenith_deg));
        for (_, points) in columns {
            let p = &points[i];
            let _ = write!(text, ",{},{}", fmt(p.pdt.mean_eta), fmt(p.pdt.mean_loss_db));
        }
        text.push('\n');
    }
    text
}

/// Rate-sweep CSV: averaged key rate per pulse for both protocols.
fn render_rate_sweep(preset: &str, weather: &str, samples: usize, bins: usize, points: &[PointResult]) -> String {
    let mut text = String::new();
    text.push_str("# fsoq rate sweep v1\n");
    let _ = writeln!(
        text,
        "# preset={preset} weather={weather} samples={samples} bins={bins} seed={FIGURE_SEED}"
    );
    text.push_str("zenith_deg,mean_eta,rate_sp,rate_wcp\n");
    for point in points {
        let rate = |r: &Option<fsoq_core::rates::KeyRateResult>| {
            r.as_ref().map(|k| fmt(k.rate_avg)).unwrap_or_default()
        };
        let _ = writeln!(
            text,
            "{},{},{},{}",
            fmt(point.zenith_deg),
            fmt(point.pdt.mean_eta),
            rate(&point.sp),
            rate(&point.wcp),
        );
    }
    text
}

fn scaled(samples: usize, samples_override: Option<usize>) -> usize {
    samples_override.unwrap_or(samples)
}

/// Generate the full catalogue under `out_dir` and write
/// `figures_manifest.csv`. `samples_override`, when given, replaces every
/// dataset's sample count (for fast smoke runs).
pub fn reproduce_figures(out_dir: &Path, samples_override: Option<usize>) -> Result<Vec<FigureEntry>> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    let mut entries = Vec::new();
    let mut emit = |name: &str, figure: &'static str, description: String, text: String| -> Result<()> {
        write_text(&out_dir.join(name), &text)?;
        entries.push(FigureEntry {
            file: name.to_string(),
            figure,
            description,
        });
        Ok(())
    };

    let hist_m = scaled(HISTOGRAM_SAMPLES, samples_override);
    let sweep_m = scaled(SWEEP_SAMPLES, samples_override);

    // Transmittance histograms at zenith, clear night.
    for (name, figure, preset, bins, label) in [
        (
            "pdt_down_night1_theta0.csv",
            "3",
            "micius-down",
            DOWN_BINS,
            "down-link",
        ),
        (
            "pdt_up_night1_theta0.csv",
            "4",
            "micius-up",
            UP_BINS,
            "up-link",
        ),
    ] {
        let config = base_config(preset, "night1", "0", hist_m, bins)?;
        let points = sweep_means(&config)?;
        emit(
            name,
            figure,
            format!("{label} transmittance histogram, zenith 0 deg, night 1, {hist_m} samples"),
            output::render_pdt_csv(&points[0].pdt, 0.0),
        )?;
    }

    // Mean transmittance vs zenith across all weather presets.
    for (name, figure, preset, label) in [
        ("sweep_down_weather.csv", "5", "micius-down", "down-link"),
        ("sweep_up_weather.csv", "6", "micius-up", "up-link"),
    ] {
        let mut columns = Vec::new();
        for weather in NIGHT_WEATHERS.iter().chain(DAY_WEATHERS.iter()) {
            let config = base_config(preset, weather, SWEEP_SPEC, sweep_m, DOWN_BINS)?;
            columns.push((weather.to_string(), sweep_means(&config)?));
        }
        emit(
            name,
            figure,
            format!("{label} mean transmittance vs zenith, all six weather presets"),
            render_weather_sweep(preset, sweep_m, &columns),
        )?;
    }

    // CubeSat-class optics, both directions, clear night.
    {
        let down = sweep_means(&base_config("cubesat-down", "night1", SWEEP_SPEC, sweep_m, DOWN_BINS)?)?;
        let up = sweep_means(&base_config("cubesat-up", "night1", SWEEP_SPEC, sweep_m, UP_BINS)?)?;
        let columns = [("down".to_string(), down), ("up".to_string(), up)];
        emit(
            "sweep_cubesat.csv",
            "7",
            "cubesat mean transmittance vs zenith, both directions, night 1".to_string(),
            render_weather_sweep("cubesat", sweep_m, &columns),
        )?;
    }

    // Finite-key rates vs zenith for both protocols at default blocks.
    for (name, figure, preset, weather, bins, label) in [
        (
            "rates_down_micius_night1.csv",
            "8",
            "micius-down",
            "night1",
            DOWN_BINS,
            "micius down-link key rates, night 1",
        ),
        (
            "rates_up_micius_night1.csv",
            "9",
            "micius-up",
            "night1",
            UP_BINS,
            "micius up-link key rates, night 1",
        ),
        (
            "rates_down_cubesat_night1.csv",
            "10",
            "cubesat-down",
            "night1",
            DOWN_BINS,
            "cubesat down-link key rates, night 1",
        ),
        (
            "rates_up_cubesat_night1.csv",
            "11",
            "cubesat-up",
            "night1",
            UP_BINS,
            "cubesat up-link key rates, night 1",
        ),
        (
            "rates_up_micius_day1.csv",
            "-",
            "micius-up",
            "day1",
            UP_BINS,
            "micius up-link key rates in daytime; rate columns are expected to be all zero",
        ),
    ] {
        let config = base_config(preset, weather, SWEEP_SPEC, sweep_m, bins)?;
        let points = sweep_points(&config, ProtocolChoice::Both)?;
        emit(
            name,
            figure,
            label.to_string(),
            render_rate_sweep(preset, weather, sweep_m, bins, &points),
        )?;
    }

    let mut manifest = String::from("file,figure,description\n");
    for entry in &entries {
        // Descriptions contain commas, so the field must be quoted to stay
        // parseable as three CSV columns.
        let quoted = entry.description.replace('"', "\"\"");
        let _ = writeln!(manifest, "{},{},\"{}\"", entry.file, entry.figure, quoted);
    }
    write_text(&out_dir.join("figures_manifest.csv"), &manifest)?;
    Ok(entries)
}
