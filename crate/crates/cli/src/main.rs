//! Command-line front end for the QKD synchronization simulator.

mod commands;
mod csvout;
mod error;
mod experiment;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::{cmd_figure, cmd_run, cmd_validate, RunArgs};

#[derive(Parser)]
#[command(
    name = "qkd-sync",
    version,
    about = "Simulates the single-photon synchronization stage of a fiber QKD link"
)]
struct Cli {
    /// Worker threads for trial batches; defaults to all cores. Results
    /// are identical for any value.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Omit the timestamp comment line from CSV outputs.
    #[arg(long, global = true)]
    no_timestamp: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override one config value, e.g. --set dark_hz=400. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        /// Trials per estimate; overrides [run] trials.
        #[arg(long)]
        trials: Option<u64>,
        /// Base RNG seed; overrides [run] seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path; overrides [run] out.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reproduce one of the detection-probability figures (2-5).
    Figure {
        figure_id: u8,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output CSV path; defaults to figure<N>.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a config file and print its derived quantities.
    Validate {
        config: PathBuf,
        /// Print the normalized config as TOML instead of the report.
        #[arg(long)]
        emit_config: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(workers) = cli.workers {
        if workers == 0 {
            eprintln!("usage error: --workers: must be at least 1, got 0");
            return ExitCode::from(2);
        }
        // Ignore the error from configuring twice; only the first call
        // can succeed in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global();
    }
    let result = match cli.command {
        Command::Run { config, sets, trials, seed, out } => cmd_run(RunArgs {
            config_path: config,
            sets,
            trials,
            seed,
            out,
            no_timestamp: cli.no_timestamp,
        }),
        Command::Figure { figure_id, trials, seed, out } => {
            cmd_figure(figure_id, trials, seed, out, cli.no_timestamp)
        }
        Command::Validate { config, emit_config } => cmd_validate(&config, emit_config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
