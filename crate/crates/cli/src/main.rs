//! `arspi` command-line pipeline: SPI, ARSPI fitting and indexing, analysis,
//! simulation and autocorrelation diagnostics.

mod commands;
mod config;
mod meta;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Bad flags, config or file contents that are not the model's fault. Exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(name = "arspi", version, about = "Classic and autoregressive standardized precipitation indices")]
struct Cli {
    /// `key = value` config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classic SPI from a Gamma fit.
    Spi {
        #[command(flatten)]
        data: DataArgs,
        /// Fit one Gamma distribution per calendar month.
        #[arg(long)]
        per_month: bool,
    },
    /// ARSPI model fitting and index construction.
    Arspi {
        #[command(subcommand)]
        command: ArspiCommand,
    },
    /// Mismatches between SPI and ARSPI, drought events and return periods.
    Analyze {
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// SPI index CSV (default `<out_dir>/spi_<window>.csv`).
        #[arg(long)]
        spi: Option<PathBuf>,
        /// ARSPI index CSV (default `<out_dir>/arspi_<window>.csv`).
        #[arg(long)]
        arspi: Option<PathBuf>,
        /// Event thresholds, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        thresholds: Option<Vec<f64>>,
    },
    /// Synthetic moving totals from the ARSPI model.
    Simulate(SimulateArgs),
    /// Sample ACF and PACF of the moving totals.
    Acf {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        max_lag: Option<usize>,
        /// Use log moving totals (dry windows count as 0).
        #[arg(long)]
        log: bool,
    },
}

#[derive(Subcommand)]
enum ArspiCommand {
    /// Run the MCMC sampler.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        chains: Option<usize>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        burn_in: Option<usize>,
        #[arg(long)]
        thin: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Prior variance of alpha.
        #[arg(long)]
        alpha_variance: Option<f64>,
    },
    /// Posterior-predictive ARSPI from a fitted posterior.
    Index {
        #[command(flatten)]
        data: DataArgs,
        /// Posterior CSV (default `<out_dir>/posterior_<window>.csv`).
        #[arg(long)]
        posterior: Option<PathBuf>,
        /// Predictive sample size per window.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Clone)]
struct DataArgs {
    /// Monthly precipitation CSV (`year,month,precip`).
    #[arg(long)]
    input: Option<PathBuf>,
    /// Precomputed moving totals (`t,year,month,mtr`) instead of `--input`.
    #[arg(long, conflicts_with = "input")]
    mtr: Option<PathBuf>,
    /// Accumulation window in months.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, allow_hyphen_values = true)]
    beta1: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta2: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long, default_value_t = 1188)]
    length: usize,
    /// Window recorded in the output; the values are drawn directly.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Starting dry probability (default: the stationary value).
    #[arg(long)]
    pi0: Option<f64>,
    /// Moving total before the first window (default: the stationary median).
    #[arg(long)]
    r0: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let usage = err.chain().any(|e| e.is::<UsageError>() || e.is::<std::io::Error>());
    if usage {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
