//! `cdrl`: train conditional and baseline policies, search conditions,
//! evaluate and sweep.
//!
//! Exit codes: 0 on success, 2 for configuration errors, 3 for runtime
//! failures.

mod commands;
mod files;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "cdrl", version, about = "Conditional reward-randomized RL with hindsight condition search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Master seed (replaces `seed` from the config).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (replaces `out` from the config).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replace one config entry; repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a conditional policy.
    Train {
        /// Config file, or the name of a built-in config.
        #[arg(long)]
        config: String,
        #[command(flatten)]
        common: Common,
    },
    /// Train a non-conditional policy on the midpoint weights with the
    /// search budget added to its training budget.
    TrainBaseline {
        #[arg(long)]
        config: String,
        #[command(flatten)]
        common: Common,
    },
    /// Search the condition space of a trained conditional policy.
    Evolve {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Baseline checkpoint to compare the search result against.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Config to use instead of the one stored in the checkpoint.
        #[arg(long)]
        config: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Fitness of a policy at one condition.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Comma-separated condition values, one per conditioned feature.
        #[arg(long, allow_hyphen_values = true)]
        condition: Option<String>,
        /// Evaluation episodes (replaces `fitness.episodes`).
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        config: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Fitness over a grid of conditions.
    Sweep {
        #[arg(long)]
        checkpoint: PathBuf,
        /// `lo:hi:n` per condition dimension, in order; at most three.
        #[arg(long = "grid", required = true, allow_hyphen_values = true)]
        grid: Vec<String>,
        #[arg(long)]
        episodes: Option<usize>,
        #[arg(long)]
        config: Option<String>,
        #[command(flatten)]
        common: Common,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, common } => commands::train(&config, &common, false),
        Command::TrainBaseline { config, common } => commands::train(&config, &common, true),
        Command::Evolve {
            checkpoint,
            baseline,
            config,
            common,
        } => commands::evolve(&checkpoint, baseline.as_deref(), config.as_deref(), &common),
        Command::Eval {
            checkpoint,
            condition,
            episodes,
            config,
            common,
        } => commands::eval(&checkpoint, condition.as_deref(), episodes, config.as_deref(), &common),
        Command::Sweep {
            checkpoint,
            grid,
            episodes,
            config,
            common,
        } => commands::sweep(&checkpoint, &grid, episodes, config.as_deref(), &common),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let is_config = err
                .chain()
                .any(|e| e.downcast_ref::<cdrl_core::Error>().is_some_and(|e| e.is_config()));
            ExitCode::from(if is_config { 2 } else { 3 })
        }
    }
}
