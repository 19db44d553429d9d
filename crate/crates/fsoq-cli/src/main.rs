use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use fsoq_cli::config::RawConfig;
use fsoq_cli::{figures, run};
use std::path::PathBuf;

/// Satellite free-space optical link simulator: transmittance
/// distributions and finite-key rates over zenith sweeps.
#[derive(Parser)]
#[command(name = "fsoq", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep a scenario and write per-point PDT histograms, a summary
    /// CSV, and a replayable run manifest.
    Run(RunArgs),
    /// Regenerate the standard figure-dataset catalogue.
    Figures(FiguresArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario preset (micius-down, micius-up, cubesat-down, cubesat-up).
    #[arg(long)]
    preset: Option<String>,
    /// Weather preset (night1..night3, day1..day3).
    #[arg(long)]
    weather: Option<String>,
    /// Zenith grid in degrees: `lo:hi:step` or a single angle.
    #[arg(long)]
    sweep: Option<String>,
    /// Monte-Carlo samples per sweep point.
    #[arg(long)]
    samples: Option<usize>,
    /// Histogram bins over [0, 1].
    #[arg(long)]
    bins: Option<usize>,
    /// Base RNG seed (same seed + config ⇒ bit-identical outputs).
    #[arg(long)]
    seed: Option<u64>,
    /// Protocols to evaluate: sp, wcp, or both.
    #[arg(long)]
    protocol: Option<String>,
    /// Sifted-block-size override (single-protocol runs only).
    #[arg(long)]
    block: Option<f64>,
    /// Secrecy failure bound.
    #[arg(long)]
    eps_sec: Option<f64>,
    /// Correctness failure bound.
    #[arg(long)]
    eps_cor: Option<f64>,
    /// Optimize protocol parameters per sweep point instead of using
    /// the preset defaults.
    #[arg(long)]
    optimize: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Key=value config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl RunArgs {
    fn into_overlay(self) -> Result<RawConfig> {
        let file = match &self.config {
            Some(path) => RawConfig::from_file(path)?,
            None => RawConfig::default(),
        };
        let flags = RawConfig {
            preset: self.preset,
            weather: self.weather,
            sweep: self.sweep,
            samples: self.samples,
            bins: self.bins,
            seed: self.seed,
            protocol: self.protocol,
            block: self.block,
            eps_sec: self.eps_sec,
            eps_cor: self.eps_cor,
            // A bare flag can only switch optimization on; absence must
            // not override an `optimize=true` from the config file.
            optimize: self.optimize.then_some(true),
            out: self.out,
        };
        Ok(file.overlay(flags))
    }
}

#[derive(Args)]
struct FiguresArgs {
    /// Output directory for the catalogue.
    #[arg(long, default_value = "fsoq-figures")]
    out: PathBuf,
    /// Override every dataset's sample count (smoke runs).
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run(args) => {
            let config = args.into_overlay()?.resolve()?;
            let output = run::run_scenario(&config)?;
            println!(
                "wrote {} sweep point(s): {} and {}",
                output.points.len(),
                output.summary_path.display(),
                output.manifest_path.display(),
            );
        }
        Command::Figures(args) => {
            let entries = figures::reproduce_figures(&args.out, args.samples)?;
            println!(
                "wrote {} figure dataset(s) under {} (see figures_manifest.csv)",
                entries.len(),
                args.out.display(),
            );
        }
    }
    Ok(())
}
