//! `sbs` — weekly brand scoring and vote-share forecasting over a news
//! corpus.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 empty-data
//! condition, 3 computation error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sbs_cli::{config, pipeline, CliError};

#[derive(Parser)]
#[command(
    name = "sbs",
    about = "Score brand importance in weekly news windows and forecast vote shares",
    version
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,

    /// Override the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads (overrides the configured parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Fail on non-positive scores instead of clamping them to the floor.
    #[arg(long, global = true)]
    no_clamp: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fetch matching articles from the news API into the corpus cache.
    Fetch,
    /// Compute the weekly score time series from the corpus.
    Score,
    /// Turn the score series at a lag week into per-basis vote-share
    /// forecasts (and evaluations, when official results are configured).
    Forecast {
        /// Whole weeks before the voting week.
        #[arg(long, default_value_t = 1)]
        lag: i64,
        /// Run a single basis (sbs, prevalence, diversity, connectivity,
        /// poll_average) instead of all of them.
        #[arg(long)]
        basis: Option<String>,
    },
    /// Re-evaluate an existing forecast report against official results.
    Evaluate {
        #[arg(long, default_value_t = 1)]
        lag: i64,
    },
    /// Emit long-format week/brand/measure/value data for plotting.
    PlotData,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_deref()
        .ok_or_else(|| CliError::usage("--config PATH is required"))?;
    let require_corpus = !matches!(cli.command, Command::Fetch);
    let mut loaded = config::load_config(config_path, require_corpus)?;
    if let Some(out) = cli.out {
        loaded.run.output_dir = out;
    }

    let jobs = cli.jobs.unwrap_or(loaded.run.parallelism).max(1);
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global()
        .map_err(|e| CliError::usage(format!("cannot size worker pool: {e}")))?;

    match cli.command {
        Command::Fetch => pipeline::run_fetch(&loaded),
        Command::Score => pipeline::run_score(&loaded),
        Command::Forecast { lag, basis } => {
            pipeline::run_forecast(&loaded, lag, basis.as_deref(), cli.no_clamp)
        }
        Command::Evaluate { lag } => pipeline::run_evaluate(&loaded, lag),
        Command::PlotData => pipeline::run_plot_data(&loaded),
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sbs: {e}");
            ExitCode::from(e.code)
        }
    }
}
