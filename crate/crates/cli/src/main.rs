//! `trmusic`: run TR-MUSIC imaging and null-spectrum statistics experiments
//! from a TOML config and write plot-ready CSV tables.

mod columns;
mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use trmusic_core::Error;

use config::{Experiment, Overrides};
use output::RunDir;

#[derive(Parser)]
#[command(name = "trmusic", version, about)]
struct Cli {
    /// Experiment config (TOML). Defaults to the built-in two-target scene.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: trmusic-<command>]
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Master seed, overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Monte Carlo trials, overrides the config.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Print the CSV columns written by the command and exit.
    #[arg(long, global = true)]
    describe: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Noise-free (and optionally one noisy) data matrix and multiple-scattering index.
    Synth,
    /// Null spectra on a grid and located scatterers.
    Image,
    /// First-order moments, NSD, stability flags and pdf parameters.
    Theory,
    /// Monte Carlo null-spectrum statistics at one SNR.
    Mc,
    /// Theoretical versus empirical NSD over an SNR grid.
    SweepSnr,
    /// Theoretical NSD versus a rigid shift of the scatterers.
    SweepShift,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Synth => Experiment::Synth,
            Command::Image => Experiment::Image,
            Command::Theory => Experiment::Theory,
            Command::Mc => Experiment::Mc,
            Command::SweepSnr => Experiment::SweepSnr,
            Command::SweepShift => Experiment::SweepShift,
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::InvalidScene(_)) => 2,
        Some(Error::UnderDetection { .. }) => 4,
        Some(_) => 3,
        None => 1,
    }
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let e: Experiment = cli.command.into();
    if cli.describe {
        print!("{}", columns::describe(e));
        return Ok(());
    }
    let ov = Overrides {
        seed: cli.seed,
        trials: cli.trials,
    };
    let cfg = config::load(cli.config.as_deref(), e, &ov)?;
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("trmusic-{}", e.name())));
    let out = RunDir::create(&dir, &cfg)?;
    match e {
        Experiment::Synth => commands::synth(&cfg, &out)?,
        Experiment::Image => commands::image(&cfg, &out)?,
        Experiment::Theory => commands::theory(&cfg, &out)?,
        Experiment::Mc => commands::mc(&cfg, &out)?,
        Experiment::SweepSnr => commands::sweep_snr_cmd(&cfg, &out)?,
        Experiment::SweepShift => commands::sweep_shift_cmd(&cfg, &out)?,
    }
    eprintln!("wrote {} (config {})", dir.display(), &out.hash()[..12]);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
