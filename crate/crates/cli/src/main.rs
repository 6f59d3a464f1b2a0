//! `stvrecon` command-line tool: weight maps, weighted-TV denoising, PET
//! simulation and structural-TV PET reconstruction.
//!
//! Every command writes its results as CSV (lossless) or PGM (display) and a
//! JSON report that embeds the fully resolved configuration.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{DenoiseArgs, MetricsArgs, PetReconArgs, PetSimArgs, PhantomArgs, WeightsArgs};

#[derive(Parser)]
#[command(name = "stvrecon", version, about)]
struct Cli {
    /// `key = value` file supplying flags not given on the command line.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Edge-vanishing weight map from an image.
    Weights(WeightsArgs),
    /// Weighted (or scalar) TV denoising.
    Denoise(DenoiseArgs),
    /// Synthetic test images.
    Phantom(PhantomArgs),
    /// Simulated PET measurement from a phantom.
    PetSim(PetSimArgs),
    /// TV or structural-TV PET reconstruction.
    PetRecon(PetReconArgs),
    /// MSE and SSIM of an image against a reference.
    Metrics(MetricsArgs),
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("STVRECON_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .with_context(|| format!("STVRECON_THREADS=`{value}` is not a thread count"))?;
    if n == 0 {
        anyhow::bail!("STVRECON_THREADS must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("configuring the thread pool")?;
    Ok(())
}

fn run() -> Result<()> {
    let args = config::merge_config(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    configure_threads()?;
    match cli.command {
        Command::Weights(a) => commands::weights(&a),
        Command::Denoise(a) => commands::denoise(&a),
        Command::Phantom(a) => commands::phantom(&a),
        Command::PetSim(a) => commands::pet_sim(&a),
        Command::PetRecon(a) => commands::pet_recon(&a),
        Command::Metrics(a) => commands::metrics(&a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
