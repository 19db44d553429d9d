//! Deterministic text output: PDT histograms, sweep summaries, and run
//! manifests.
//!
//! Floats are written with Rust's shortest-round-trip formatting, so a
//! file's bytes are a pure function of the computed values — identical
//! runs produce identical files regardless of thread count, and parsing
//! a manifest back recovers the exact same parameter bits.

use crate::config::RunConfig;
use crate::run::PointResult;
use anyhow::{Context, Result};
use fsoq_core::geometry::{LinkScenario, WeatherCondition};
use fsoq_core::pdt::TransmittanceDistribution;
use fsoq_core::rates::{KeyRateResult, ProtocolParams, ProtocolVariant};
use std::fmt::Write as _;
use std::path::Path;

/// Render a float with shortest-round-trip digits.
fn fmt(value: f64) -> String {
    if value.is_infinite() {
        (if value > 0.0 { "inf" } else { "-inf" }).to_string()
    } else {
        format!("{value}")
    }
}

/// PDT histogram CSV: header comments with the summary statistics, then
/// one row per bin over the full [0, 1] range.
pub fn render_pdt_csv(pdt: &TransmittanceDistribution, zenith_deg: f64) -> String {
    let mut text = String::new();
    text.push_str("# fsoq pdt v1\n");
    let _ = writeln!(text, "# zenith_deg={}", fmt(zenith_deg));
    let _ = writeln!(text, "# samples={}", pdt.sample_count);
    let _ = writeln!(text, "# mean_eta={}", fmt(pdt.mean_eta));
    let _ = writeln!(text, "# median_eta={}", fmt(pdt.median_eta));
    let _ = writeln!(text, "# std_eta={}", fmt(pdt.std_eta));
    let _ = writeln!(text, "# mean_loss_db={}", fmt(pdt.mean_loss_db));
    text.push_str("bin_lower,bin_upper,probability\n");
    for (i, &p) in pdt.bin_prob.iter().enumerate() {
        let (lo, hi) = pdt.bin_edges(i);
        let _ = writeln!(text, "{},{},{}", fmt(lo), fmt(hi), fmt(p));
    }
    text
}

/// Fixed, versioned column set of the sweep summary.
pub const SUMMARY_COLUMNS: &str = "zenith_deg,slant_length_m,atmo_path_m,mean_eta,mean_loss_db,\
rate_sp,rate_wcp,sp_pe_bits,sp_q_tol,wcp_mu_signal,wcp_mu_decoy,wcp_mu_vacuum,\
wcp_p_signal,wcp_p_decoy,wcp_p_vacuum,wcp_basis_prob";

fn sp_param_fields(result: &KeyRateResult) -> (String, String) {
    match result.params.variant {
        ProtocolVariant::SinglePhoton { pe_bits, q_tol } => (fmt(pe_bits), fmt(q_tol)),
        ProtocolVariant::DecoyWcp { .. } => (String::new(), String::new()),
    }
}

fn wcp_param_fields(result: &KeyRateResult) -> [String; 7] {
    match result.params.variant {
        ProtocolVariant::DecoyWcp {
            intensities: [mu1, mu2, mu3],
            intensity_probs: [p1, p2, p3],
            basis_prob,
        } => [
            fmt(mu1),
            fmt(mu2),
            fmt(mu3),
            fmt(p1),
            fmt(p2),
            fmt(p3),
            fmt(basis_prob),
        ],
        ProtocolVariant::SinglePhoton { .. } => Default::default(),
    }
}

/// One summary row; protocol fields are empty when not computed.
pub fn render_summary_row(point: &PointResult) -> String {
    let (rate_sp, sp_pe, sp_tol) = match &point.sp {
        Some(r) => {
            let (pe, tol) = sp_param_fields(r);
            (fmt(r.rate_avg), pe, tol)
        }
        None => Default::default(),
    };
    let (rate_wcp, wcp_fields) = match &point.wcp {
        Some(r) => (fmt(r.rate_avg), wcp_param_fields(r)),
        None => Default::default(),
    };
    let [mu1, mu2, mu3, p1, p2, p3, qx] = wcp_fields;
    format!(
        "{},{},{},{},{},{rate_sp},{rate_wcp},{sp_pe},{sp_tol},{mu1},{mu2},{mu3},{p1},{p2},{p3},{qx}",
        fmt(point.zenith_deg),
        fmt(point.slant_length_m),
        fmt(point.atmo_path_m),
        fmt(point.pdt.mean_eta),
        fmt(point.pdt.mean_loss_db),
    )
}

/// Full sweep summary CSV.
pub fn render_summary_csv(points: &[PointResult]) -> String {
    let mut text = String::from("# fsoq sweep v1\n");
    text.push_str(SUMMARY_COLUMNS);
    text.push('\n');
    for point in points {
        text.push_str(&render_summary_row(point));
        text.push('\n');
    }
    text
}

fn protocol_comment(label: &str, params: &ProtocolParams) -> String {
    match params.variant {
        ProtocolVariant::SinglePhoton { pe_bits, q_tol } => format!(
            "# resolved {label}: block={} pe_bits={} q_tol={} eps_sec={} eps_cor={} f_ec={} rep_rate={}\n",
            fmt(params.block_n),
            fmt(pe_bits),
            fmt(q_tol),
            fmt(params.eps_sec),
            fmt(params.eps_cor),
            fmt(params.f_ec),
            fmt(params.rep_rate),
        ),
        ProtocolVariant::DecoyWcp {
            intensities: [mu1, mu2, mu3],
            intensity_probs: [p1, p2, p3],
            basis_prob,
        } => format!(
            "# resolved {label}: block={} mu=({},{},{}) p=({},{},{}) basis_prob={} eps_sec={} eps_cor={} f_ec={} rep_rate={}\n",
            fmt(params.block_n),
            fmt(mu1),
            fmt(mu2),
            fmt(mu3),
            fmt(p1),
            fmt(p2),
            fmt(p3),
            fmt(basis_prob),
            fmt(params.eps_sec),
            fmt(params.eps_cor),
            fmt(params.f_ec),
            fmt(params.rep_rate),
        ),
    }
}

/// Run manifest: a replayable key=value config (every resolved knob plus
/// the seed) with the derived physical parameters as comments.
pub fn render_manifest(
    config: &RunConfig,
    scenario: &LinkScenario,
    weather: &WeatherCondition,
    noise_preset: &str,
    sp_params: Option<&ProtocolParams>,
    wcp_params: Option<&ProtocolParams>,
) -> String {
    let mut text = String::new();
    text.push_str("# fsoq run manifest v1\n");
    text.push_str("# replay with: fsoq run --config <this file>\n");
    let _ = writeln!(text, "preset={}", config.preset);
    let _ = writeln!(text, "weather={}", config.weather);
    let _ = writeln!(text, "sweep={}", config.sweep_spec);
    let _ = writeln!(text, "samples={}", config.samples);
    let _ = writeln!(text, "bins={}", config.bins);
    let _ = writeln!(text, "seed={}", config.seed);
    let _ = writeln!(text, "protocol={}", config.protocol.as_str());
    if let Some(block) = config.block {
        let _ = writeln!(text, "block={}", fmt(block));
    }
    let _ = writeln!(text, "eps_sec={}", fmt(config.eps_sec));
    let _ = writeln!(text, "eps_cor={}", fmt(config.eps_cor));
    let _ = writeln!(text, "optimize={}", config.optimize);
    let _ = writeln!(text, "out={}", config.out.display());
    let _ = writeln!(
        text,
        "# resolved scenario: direction={:?} w0_m={} receiver_radius_m={} wavelength_m={} \
sat_altitude_m={} atmo_thickness_m={} pointing_error_rad={} detector_efficiency={} \
optics_transmittance={}",
        scenario.direction,
        fmt(scenario.w0),
        fmt(scenario.receiver_radius),
        fmt(scenario.wavelength),
        fmt(scenario.sat_altitude),
        fmt(scenario.atmo_thickness),
        fmt(scenario.pointing_error),
        fmt(scenario.detector_efficiency),
        fmt(scenario.optics_transmittance),
    );
    let _ = writeln!(
        text,
        "# resolved weather: cn2={} n0={} beta={} daytime={}",
        fmt(weather.cn2),
        fmt(weather.n0),
        fmt(weather.beta),
        weather.daytime,
    );
    let _ = writeln!(text, "# resolved noise preset: {noise_preset}");
    if let Some(params) = sp_params {
        text.push_str(&protocol_comment("protocol sp", params));
    }
    if let Some(params) = wcp_params {
        text.push_str(&protocol_comment("protocol wcp", params));
    }
    text
}

/// Write text to a file, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create output directory {}", parent.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

/// Zero-padded per-point PDT file name (index keeps names stable for
/// fractional angles).
pub fn pdt_file_name(index: usize) -> String {
    format!("pdt_point_{index:03}.csv")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        for value in [1e-9, 0.1, 1.0 / 3.0, 123456789.25, 6.5e-324] {
            let text = fmt(value);
            assert_eq!(text.parse::<f64>().unwrap(), value, "round trip of {text}");
        }
        assert_eq!(fmt(f64::INFINITY), "inf");
    }

    #[test]
    fn pdt_csv_has_one_row_per_bin() {
        let pdt = TransmittanceDistribution::from_samples(&[0.1, 0.2, 0.30001], 10).unwrap();
        let text = render_pdt_csv(&pdt, 45.0);
        let data_rows = text.lines().filter(|l| !l.starts_with('#')).count();
        assert_eq!(data_rows, 1 + 10, "header plus one row per bin");
        assert!(text.contains("# zenith_deg=45"));
        assert!(text.contains("bin_lower,bin_upper,probability"));
    }

    #[test]
    fn summary_columns_count_matches_every_row() {
        let n_cols = SUMMARY_COLUMNS.split(',').count();
        assert_eq!(n_cols, 16);
    }
}
