//! `arglab`: train, run, and evaluate the BiLSTM argument labeler for
//! explicit discourse relations.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use arglab_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "arglab",
    version,
    about = "BiLSTM argument labeling for explicit discourse relations",
    after_help = "Setting precedence: built-in defaults < --config file < flags.\n\
                  Exit codes: 2 config/usage, 3 parse, 4 validation, 5 numeric, 6 I/O."
)]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct CommonArgs {
    /// Declarative config file (TOML, sectioned).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for reports, checkpoints, and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for the batch backward pass.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

impl CommonArgs {
    pub fn config(&self) -> Option<&std::path::Path> {
        self.config.as_deref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn out(&self) -> Option<&std::path::Path> {
        self.out.as_deref()
    }

    pub fn workers(&self) -> Option<usize> {
        self.workers
    }
}

#[derive(Subcommand)]
enum Command {
    /// Corpus statistics: split/type counts and the argument-distance
    /// histogram.
    Stats {
        /// Training-split relation file (JSON lines).
        #[arg(long)]
        train: Option<PathBuf>,
        /// Test-split relation file (JSON lines).
        #[arg(long)]
        test: Option<PathBuf>,
        /// Token-per-line document directory; enables offset validation.
        #[arg(long)]
        tokens: Option<PathBuf>,
    },
    /// Generate a synthetic corpus with planted argument spans.
    Synth {
        /// Number of instances.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        vocab_size: Option<usize>,
        #[arg(long)]
        max_window: Option<usize>,
        /// Distance distribution, e.g. "0:0.25,1:0.5,5:0.15,12:0.10".
        #[arg(long)]
        distances: Option<String>,
        #[arg(long)]
        doc_prefix: Option<String>,
    },
    /// Train a model; writes the epoch CSV, checkpoints, and a manifest.
    Train {
        /// Resume from a training checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Label a relation file with a trained model.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        relations: PathBuf,
        #[arg(long)]
        tokens: PathBuf,
    },
    /// Score a prediction file against gold relations.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gold: PathBuf,
        /// Fold connective tokens into Arg2 before matching.
        #[arg(long)]
        conn_in_arg2: bool,
    },
    /// Check analytic gradients against central finite differences on a
    /// reduced model.
    Gradcheck {
        /// Model variant to check (m1 or m2).
        #[arg(long, default_value = "m1")]
        variant: String,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
        /// Coordinates sampled per tensor family.
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Parse { .. } => 3,
        Error::Validation(_) | Error::OversizedWindow { .. } => 4,
        Error::Numeric(_) => 5,
        Error::Io { .. } => 6,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let common = cli.common;
    let result = match cli.command {
        Command::Stats { train, test, tokens } => commands::stats::run(&common, train, test, tokens),
        Command::Synth {
            n,
            vocab_size,
            max_window,
            distances,
            doc_prefix,
        } => commands::synth::run(&common, n, vocab_size, max_window, distances, doc_prefix),
        Command::Train { resume } => commands::train::run(&common, resume),
        Command::Predict {
            checkpoint,
            relations,
            tokens,
        } => commands::predict::run(&common, checkpoint, relations, tokens),
        Command::Score {
            pred,
            gold,
            conn_in_arg2,
        } => commands::score::run(&common, pred, gold, conn_in_arg2),
        Command::Gradcheck {
            variant,
            epsilon,
            samples,
            tolerance,
        } => commands::gradcheck::run(&common, &variant, epsilon, samples, tolerance),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
