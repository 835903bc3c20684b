//! `phasecomm` — config-driven studies of binary coherent-state communication
//! through a Gaussian phase-diffusion channel.
//!
//! `run` executes a preset or TOML config and writes CSV tables plus a JSON
//! summary; `compare` checks two CSV outputs against per-column tolerances.
//! Exit codes: 0 success, 1 comparison tolerance violation, 2 configuration
//! or usage error, 3 numerical or I/O failure.

mod compare;
mod config;
mod runner;
mod table;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Failure modes with distinct exit codes: `Config` → 2, `Runtime` → 3,
/// `CompareFailed` → 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
    CompareFailed { column: String },
}

impl From<phasecomm::Error> for CliError {
    fn from(e: phasecomm::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Parser)]
#[command(
    name = "phasecomm",
    version,
    about = "Binary coherent-state discrimination and information transfer \
             under phase diffusion: receiver optimization, σ sweeps, Monte \
             Carlo validation, and phase-noise calibration."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a study from a preset or config file; writes CSV + JSON summary.
    Run(RunArgs),
    /// Compare two CSV outputs column-by-column against tolerances.
    Compare(CompareArgs),
    /// List the built-in presets.
    Presets,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file (alternative to --preset).
    #[arg(long, value_name = "FILE", conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset name (see the `presets` subcommand).
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Worker threads for parallel sections (default: one per core).
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Override the config's RNG seed.
    #[arg(long, value_name = "SEED")]
    seed: Option<u64>,
    /// Override a config key with TOML value syntax, e.g.
    /// --set sigma_count=5 or --set 'ms=[1,3]'. Repeatable; applied after
    /// PHASECOMM_* environment overrides.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Args)]
struct CompareArgs {
    /// Reference CSV.
    baseline: PathBuf,
    /// CSV under test; must match the baseline's header and row count.
    candidate: PathBuf,
    /// Default absolute tolerance for every column.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Per-column tolerance override, e.g. --col-tol pe_hat=1e-3. Repeatable.
    #[arg(long = "col-tol", value_name = "COLUMN=TOL")]
    col_tols: Vec<String>,
}

fn main() {
    let cli = Cli::parse();
    let code = match dispatch(cli) {
        Ok(()) => 0,
        Err(CliError::CompareFailed { column }) => {
            eprintln!("comparison failed: column {column} exceeds tolerance");
            1
        }
        Err(CliError::Config(msg)) => {
            eprintln!("config error: {msg}");
            2
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            3
        }
    };
    std::process::exit(code);
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => run(args),
        Command::Compare(args) => {
            compare::compare(&args.baseline, &args.candidate, args.tol, &args.col_tols)
        }
        Command::Presets => {
            for (name, _) in config::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    }
}

fn run(args: RunArgs) -> Result<(), CliError> {
    if let Some(workers) = args.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot configure {workers} workers: {e}")))?;
    }
    let config = config::load(
        args.preset.as_deref(),
        args.config.as_deref(),
        &args.sets,
        args.seed,
    )?;
    let output = runner::execute(&config, &args.out)?;
    for file in &output.files {
        println!("wrote {}", file.display());
    }
    Ok(())
}
