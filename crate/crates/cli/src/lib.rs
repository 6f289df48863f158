//! Command-line driver for segmix.
//!
//! Every subcommand takes `--seed`; all randomness derives from it through
//! named streams. Options can also come from a flat `key = value` file given
//! with `--config`; explicit flags win over the file, the file over defaults.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod stats;

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Usage problems detected after argument parsing (exit code 1).
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

#[derive(Debug, Parser)]
#[command(name = "segmix", version, about = "Segment-level mixing augmentation for NER and RE")]
pub struct Cli {
    /// Flat key = value file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<std::path::PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate mixed examples from a corpus.
    Augment(commands::augment::AugmentArgs),
    /// Train a tagger or relation classifier.
    Train(commands::train::TrainArgs),
    /// Evaluate a checkpoint on a test corpus.
    Eval(commands::eval::EvalArgs),
    /// Grid of data size x rate x variant x seed runs.
    Sweep(commands::sweep::SweepArgs),
    /// Time mixing and training.
    Bench(commands::bench::BenchArgs),
    /// Render mixed examples through nearest-token lookup.
    Recover(commands::recover::RecoverArgs),
    /// Write template-generated corpora.
    Synth(commands::synth::SynthArgs),
    /// Re-run the command recorded in a manifest and compare outputs.
    Replay(commands::replay::ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Ner,
    Re,
}

/// Random embedding table parameters.
#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct TableArgs {
    /// Embedding dimension.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    /// Hash buckets for unknown tokens.
    #[arg(long, default_value_t = 16)]
    pub buckets: usize,
    /// Seed of the embedding table; defaults to --seed.
    #[arg(long)]
    pub table_seed: Option<u64>,
}

/// Optimiser and model shape.
#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct FitArgs {
    #[arg(long, default_value_t = 100)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    #[arg(long, default_value_t = 10)]
    pub patience: usize,
    /// Context tokens on each side for the tagger.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
}

impl FitArgs {
    pub fn train_config(&self, seed: u64) -> segmix::model::TrainConfig {
        segmix::model::TrainConfig {
            epochs: self.epochs,
            learning_rate: self.lr,
            batch_size: self.batch_size,
            patience: self.patience,
            seed,
        }
    }
}

/// Mixing options shared by augment, sweep and bench.
#[derive(Debug, Clone, Args, serde::Serialize)]
pub struct MixArgs {
    /// Beta(alpha, alpha) shape.
    #[arg(long, default_value_t = 8.0)]
    pub alpha: f64,
    /// Rescale padded tail label rows to sum to one.
    #[arg(long)]
    pub normalize_tail_labels: bool,
    /// Draw mention/token partners of the same entity type only.
    #[arg(long)]
    pub same_type_only: bool,
    /// Redraws per slot when the candidate has no eligible segment.
    #[arg(long, default_value_t = 16)]
    pub max_retries: usize,
    /// Fix lambda instead of sampling it (draws are still consumed).
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Run generation on one thread.
    #[arg(long)]
    pub serial: bool,
}

impl MixArgs {
    pub fn mix_config(
        &self,
        variant: segmix::mixer::VariantMix,
        rate: f64,
        seed: u64,
    ) -> segmix::mixer::MixConfig {
        segmix::mixer::MixConfig {
            alpha: self.alpha,
            rate,
            variant,
            normalize_tail_labels: self.normalize_tail_labels,
            seed,
            same_type_only: self.same_type_only,
            max_retries: self.max_retries,
            lambda_override: self.lambda,
            execution: execution(self.serial),
            ..segmix::mixer::MixConfig::default()
        }
    }
}

pub fn execution(serial: bool) -> segmix::par::Execution {
    if serial {
        segmix::par::Execution::Sequential
    } else {
        segmix::par::Execution::Parallel
    }
}

/// Parse and run; returns the process exit code.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match config::merge(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(exit_code(&e));
        }
    };
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::dispatch(cli, &args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<UsageError>().is_some() {
        1
    } else {
        2
    }
}
