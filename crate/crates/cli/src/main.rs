use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modeswitch_cli::commands::{cmd_replay, cmd_run, cmd_validate, report_error, resolve_out};
use modeswitch_cli::{CliError, RunConfig};

const DEFAULT_SEED: u64 = 2024;

fn validate_settings(
    seed: Option<u64>,
    config: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<(u64, PathBuf), CliError> {
    match config {
        Some(path) => {
            let p = RunConfig::from_path(&path)?.prepare()?;
            let dir = match (std::env::var_os(modeswitch_cli::config::OUT_ENV), out) {
                (None, Some(flag)) => flag,
                _ => p.out_dir,
            };
            Ok((seed.unwrap_or(p.seed), dir))
        }
        None => Ok((seed.unwrap_or(DEFAULT_SEED), resolve_out(out))),
    }
}

#[derive(Parser)]
#[command(
    name = "modeswitch",
    version,
    about = "Mode-schedule optimization for switched systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the schedule described by a config file.
    Run { config: PathBuf },
    /// Run the oracle suite and write validation_report.json.
    Validate {
        /// Probe seed; overrides `validation.seed` from `--config`.
        #[arg(long)]
        seed: Option<u64>,
        /// Take the seed and output directory from a run config.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-simulate a saved schedule on the grid and model of a config.
    Replay { schedule: PathBuf, config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Validate { seed, config, out } => validate_settings(seed, config, out)
            .and_then(|(seed, dir)| cmd_validate(seed, &dir).map(|(code, _)| code)),
        Command::Replay { schedule, config } => {
            cmd_replay(&schedule, &config).map(|(code, ..)| code)
        }
    };
    ExitCode::from(result.unwrap_or_else(|e| report_error(&e)))
}
