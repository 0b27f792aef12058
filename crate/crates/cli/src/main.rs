//! `connectome`: EEG connectivity features and CNN ensemble classification.
//!
//! ```text
//! connectome extract --config run.cfg
//! connectome train   --config run.cfg
//! connectome eval    --config run.cfg
//! connectome predict --config run.cfg --model out/models/cnn2d_pdc.fold0.model --input rec.csv
//! connectome report  --config run.cfg
//! ```

mod artifacts;
mod eval;
mod extract;
mod predict;
mod report;
mod train;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use connectome::config::RunConfig;

#[derive(Parser)]
#[command(name = "connectome", version, about = "EEG directed-connectivity features and multi-domain CNN classification")]
struct Cli {
    /// Master seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit VAR models and write VAR, PDC and CN feature files per subject.
    Extract {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cross-validate the configured models; write models, curves, folds and predictions.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Score out-of-fold predictions and write the metrics JSON.
    Eval {
        #[arg(long)]
        config: PathBuf,
    },
    /// Classify one raw EEG recording with a saved model.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
    },
    /// Learning-curve SVGs, feature-map heatmaps and the latency table.
    Report {
        #[arg(long)]
        config: PathBuf,
    },
}

fn load_config(path: &PathBuf, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(path).with_context(|| format!("reading config {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Extract { config } => extract::run(&load_config(config, cli.seed)?),
        Command::Train { config } => train::run(&load_config(config, cli.seed)?),
        Command::Eval { config } => eval::run(&load_config(config, cli.seed)?),
        Command::Predict { config, model, input } => predict::run(&load_config(config, cli.seed)?, model, input),
        Command::Report { config } => report::run(&load_config(config, cli.seed)?),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
