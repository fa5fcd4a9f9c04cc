//! Command-line front end for the clock simulator.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::time::Instant;

use commands::Context;
use config::ExperimentFile;
use error::CliError;
use output::{to_pretty, Format, OutputDir, RunManifest};

#[derive(Debug, Parser)]
#[command(name = "sqclock", version, about = "Ramsey clock simulator with coherent and squeezed detection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `[clock].seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    pub format: Format,
    /// Also write a gnuplot script next to each CSV table.
    #[arg(long, global = true)]
    pub plot: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ramsey fringe: transition probability vs detuning.
    Fringe,
    /// Squeezing spectrum over Ω₀ and φ₋.
    Spectrum,
    /// Coherent vs squeezed S/N over a φ₋ or ξ sweep.
    Snr,
    /// Closed-loop clock simulation.
    Clock,
    /// Allan deviation of a record or of a fresh simulation.
    Allan {
        /// Record CSV to analyse instead of `[allan].record` or a simulation.
        #[arg(long)]
        record: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Fringe => "fringe",
            Command::Spectrum => "spectrum",
            Command::Snr => "snr",
            Command::Clock => "clock",
            Command::Allan { .. } => "allan",
        }
    }
}

/// Runs one command and writes its files plus `manifest.json`.
pub fn run(cli: &Cli) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::config("--config <path> is required"))?;
    let mut file = ExperimentFile::load(config_path)?;
    file.override_seed(cli.seed);
    let snapshot = file.snapshot();

    let mut out = OutputDir::create(&cli.out, cli.plot)?;
    let ctx = Context { file: &file, config_path, format: cli.format };
    match &cli.command {
        Command::Fringe => commands::cmd_fringe(&ctx, &mut out)?,
        Command::Spectrum => commands::cmd_spectrum(&ctx, &mut out)?,
        Command::Snr => commands::cmd_snr(&ctx, &mut out)?,
        Command::Clock => commands::cmd_clock(&ctx, &mut out)?,
        Command::Allan { record } => commands::cmd_allan(&ctx, &mut out, record.as_deref())?,
    }
    out.write("config.resolved.toml", &snapshot)?;

    let manifest = RunManifest {
        command: cli.command.name().to_string(),
        config_path: config_path.display().to_string(),
        config_snapshot: snapshot,
        seed: file.clock.as_ref().map(|c| c.seed),
        output_dir: out.root.display().to_string(),
        files: out.files.iter().map(|p| file_name(p)).collect(),
        wall_clock_s: started.elapsed().as_secs_f64(),
    };
    std::fs::write(out.root.join("manifest.json"), to_pretty(&manifest))?;
    Ok(manifest)
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}
