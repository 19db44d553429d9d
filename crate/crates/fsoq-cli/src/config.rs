//! Run configuration: plain-text key=value files, flag overlays, and
//! resolution into a fully-validated sweep description.
//!
//! The same format serves as input config and as the run manifest each
//! run writes next to its outputs, so any run can be replayed
//! bit-for-bit with `--config <manifest>`.

use anyhow::{anyhow, bail, Context, Result};
use fsoq_core::geometry::{LinkScenario, WeatherCondition};
use std::path::{Path, PathBuf};

/// Which protocols a run evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolChoice {
    Sp,
    Wcp,
    Both,
}

impl ProtocolChoice {
    pub fn includes_sp(self) -> bool {
        matches!(self, Self::Sp | Self::Both)
    }
    pub fn includes_wcp(self) -> bool {
        matches!(self, Self::Wcp | Self::Both)
    }
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sp => "sp",
            Self::Wcp => "wcp",
            Self::Both => "both",
        }
    }
}

/// Partially-specified configuration, as read from a file or from CLI
/// flags. Later overlays win field-by-field.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    pub preset: Option<String>,
    pub weather: Option<String>,
    pub sweep: Option<String>,
    pub samples: Option<usize>,
    pub bins: Option<usize>,
    pub seed: Option<u64>,
    pub protocol: Option<String>,
    pub block: Option<f64>,
    pub eps_sec: Option<f64>,
    pub eps_cor: Option<f64>,
    pub optimize: Option<bool>,
    pub out: Option<PathBuf>,
}

impl RawConfig {
    /// Parse a key=value file; `#` starts a comment, blank lines are
    /// ignored, unknown keys are rejected.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        let mut raw = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{}:{}: expected key=value", path.display(), lineno + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = || format!("{}:{}: invalid value for {key}", path.display(), lineno + 1);
            match key {
                "preset" => raw.preset = Some(value.to_string()),
                "weather" => raw.weather = Some(value.to_string()),
                "sweep" => raw.sweep = Some(value.to_string()),
                "samples" => raw.samples = Some(value.parse().with_context(ctx)?),
                "bins" => raw.bins = Some(value.parse().with_context(ctx)?),
                "seed" => raw.seed = Some(value.parse().with_context(ctx)?),
                "protocol" => raw.protocol = Some(value.to_string()),
                "block" => raw.block = Some(value.parse().with_context(ctx)?),
                "eps_sec" => raw.eps_sec = Some(value.parse().with_context(ctx)?),
                "eps_cor" => raw.eps_cor = Some(value.parse().with_context(ctx)?),
                "optimize" => raw.optimize = Some(value.parse().with_context(ctx)?),
                "out" => raw.out = Some(PathBuf::from(value)),
                other => bail!(
                    "{}:{}: unknown configuration key `{other}`",
                    path.display(),
                    lineno + 1
                ),
            }
        }
        Ok(raw)
    }

    /// Field-by-field overlay: values present in `over` win.
    pub fn overlay(self, over: Self) -> Self {
        Self {
            preset: over.preset.or(self.preset),
            weather: over.weather.or(self.weather),
            sweep: over.sweep.or(self.sweep),
            samples: over.samples.or(self.samples),
            bins: over.bins.or(self.bins),
            seed: over.seed.or(self.seed),
            protocol: over.protocol.or(self.protocol),
            block: over.block.or(self.block),
            eps_sec: over.eps_sec.or(self.eps_sec),
            eps_cor: over.eps_cor.or(self.eps_cor),
            optimize: over.optimize.or(self.optimize),
            out: over.out.or(self.out),
        }
    }

    /// Fill defaults, validate every name and range, and resolve the
    /// sweep grid.
    pub fn resolve(self) -> Result<RunConfig> {
        let preset = self.preset.unwrap_or_else(|| "micius-down".to_string());
        if LinkScenario::preset(&preset).is_none() {
            bail!(
                "unknown scenario preset `{preset}` (available: {})",
                LinkScenario::preset_names().join(", ")
            );
        }
        let weather = self.weather.unwrap_or_else(|| "night1".to_string());
        if WeatherCondition::preset(&weather).is_none() {
            bail!(
                "unknown weather preset `{weather}` (available: {})",
                WeatherCondition::preset_names().join(", ")
            );
        }
        let sweep_spec = self.sweep.unwrap_or_else(|| "0:80:10".to_string());
        let sweep_deg = parse_sweep(&sweep_spec)?;
        let protocol = match self.protocol.as_deref().unwrap_or("both") {
            "sp" => ProtocolChoice::Sp,
            "wcp" => ProtocolChoice::Wcp,
            "both" => ProtocolChoice::Both,
            other => bail!("unknown protocol `{other}` (expected sp, wcp, or both)"),
        };
        if self.block.is_some() && protocol == ProtocolChoice::Both {
            bail!("--block requires --protocol sp or --protocol wcp (the defaults differ)");
        }
        let samples = self.samples.unwrap_or(1000);
        if samples == 0 {
            bail!("samples must be >= 1");
        }
        let bins = self.bins.unwrap_or(200);
        if bins < 2 {
            bail!("bins must be >= 2");
        }
        for (name, value) in [("eps_sec", self.eps_sec), ("eps_cor", self.eps_cor)] {
            if let Some(v) = value {
                if !(v > 0.0 && v < 1.0) {
                    bail!("{name} must lie strictly between 0 and 1, got {v}");
                }
            }
        }
        Ok(RunConfig {
            preset,
            weather,
            sweep_spec,
            sweep_deg,
            samples,
            bins,
            seed: self.seed.unwrap_or(1),
            protocol,
            block: self.block,
            eps_sec: self.eps_sec.unwrap_or(1e-9),
            eps_cor: self.eps_cor.unwrap_or(1e-9),
            optimize: self.optimize.unwrap_or(false),
            out: self.out.unwrap_or_else(|| PathBuf::from("fsoq-run")),
        })
    }
}

/// Fully-resolved run description.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub preset: String,
    pub weather: String,
    /// Sweep grid as written (`lo:hi:step` or a single angle), kept for
    /// the manifest so replays parse the identical grid.
    pub sweep_spec: String,
    /// Resolved zenith grid (degrees).
    pub sweep_deg: Vec<f64>,
    pub samples: usize,
    pub bins: usize,
    pub seed: u64,
    pub protocol: ProtocolChoice,
    /// Block-size override; only valid for single-protocol runs.
    pub block: Option<f64>,
    pub eps_sec: f64,
    pub eps_cor: f64,
    pub optimize: bool,
    pub out: PathBuf,
}

/// Parse a zenith grid in degrees: `lo:hi:step` (inclusive of `hi` up
/// to rounding) or a single angle.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [single] => vec![single
            .trim()
            .parse::<f64>()
            .with_context(|| format!("invalid sweep angle `{spec}`"))?],
        [lo, hi, step] => {
            let lo: f64 = lo.trim().parse().context("invalid sweep lower bound")?;
            let hi: f64 = hi.trim().parse().context("invalid sweep upper bound")?;
            let step: f64 = step.trim().parse().context("invalid sweep step")?;
            if step <= 0.0 || hi < lo {
                bail!("sweep must satisfy lo <= hi with step > 0, got `{spec}`");
            }
            if !(0.0..=80.0).contains(&lo) || !(0.0..=80.0).contains(&hi) {
                bail!("sweep bounds must lie in [0°, 80°], got `{spec}`");
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| lo + i as f64 * step).collect()
        }
        _ => bail!("sweep must be `lo:hi:step` or a single angle, got `{spec}`"),
    };
    for &deg in &grid {
        if !(0.0..=80.0).contains(&deg) {
            bail!("sweep angle {deg}° outside the supported range [0°, 80°]");
        }
    }
    Ok(grid)
}
