mod commands;
mod config;
mod error;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{JobConfig, Settings};
use crate::error::{CliError, CliResult};

/// One-shot labeling of judgment holes and meta-evaluation of the filled
/// judgments against full qrels.
#[derive(Parser)]
#[command(name = "holefill", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a shallow pool from the baseline run and full qrels.
    SimulatePool(JobArgs),
    /// Score every hole with the configured labeler into the score cache.
    Label(JobArgs),
    /// Evaluate every run under the filled judgments.
    Evaluate(JobArgs),
    /// Compare system rankings under filled and full judgments.
    Compare(JobArgs),
    /// Precision/recall of the labeler against full qrels.
    PrCurve(JobArgs),
}

#[derive(Args)]
struct JobArgs {
    /// TOML file with the job settings; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

fn run(cli: Cli) -> CliResult<String> {
    type Handler = fn(&JobConfig) -> CliResult<String>;
    let (args, handler): (JobArgs, Handler) = match cli.command {
        Command::SimulatePool(a) => (a, commands::simulate_pool_cmd),
        Command::Label(a) => (a, commands::label_cmd),
        Command::Evaluate(a) => (a, commands::evaluate_cmd),
        Command::Compare(a) => (a, commands::compare_cmd),
        Command::PrCurve(a) => (a, commands::pr_curve_cmd),
    };
    let cfg = JobConfig::load(args.config.as_deref(), args.settings)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    handler(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(stdout) => {
            let mut out = std::io::stdout().lock();
            if out
                .write_all(stdout.as_bytes())
                .and_then(|_| out.flush())
                .is_err()
            {
                return ExitCode::from(1);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Coverage { missing, .. } = &e {
                for (qid, doc) in missing {
                    eprintln!("  missing {qid} {doc}");
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
