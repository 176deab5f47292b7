//! Command-line interface definition.

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "ramol",
    version,
    about = "Retrieval-augmented online learning experiments on data streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run prequential evaluation for one variant over one or more seeds.
    Run(RunArgs),
    /// Run the six-variant ablation under a single seed.
    Ablate(AblateArgs),
    /// Measure seed variability and runtime factors across variants.
    Bench(BenchArgs),
    /// Materialise a synthetic stream to CSV with a Bayes-label sidecar.
    Gen(GenArgs),
    /// Grid-search replay hyperparameters on a validation prefix.
    Tune(TuneArgs),
}

/// Where examples come from: a CSV file or a synthetic regime spec.
#[derive(Args, Debug, Clone)]
pub struct SourceArgs {
    /// CSV dataset path (header row required).
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<std::path::PathBuf>,

    /// Synthetic stream spec (TOML regime list).
    #[arg(long)]
    pub synthetic: Option<std::path::PathBuf>,

    /// Stream seed for synthetic sources.
    #[arg(long, default_value_t = 0)]
    pub stream_seed: u64,

    /// Label column name.
    #[arg(long, default_value = "class")]
    pub label_col: String,

    /// Comma-separated feature column names (default: all non-label columns).
    #[arg(long, value_delimiter = ',')]
    pub feature_cols: Option<Vec<String>>,

    /// CSV delimiter.
    #[arg(long, default_value = ",")]
    pub delimiter: String,

    /// Explicit label alphabet in class-index order.
    #[arg(long, value_delimiter = ',')]
    pub label_values: Option<Vec<String>>,
}

/// Learner hyperparameters shared by the experiment commands.
#[derive(Args, Debug, Clone)]
pub struct HyperArgs {
    /// Memory buffer capacity B.
    #[arg(long, default_value_t = 500)]
    pub buffer: usize,

    /// Neighbour count K.
    #[arg(long, default_value_t = 5)]
    pub k: usize,

    /// Time window H in steps (memory variants; defaults to 2000 for
    /// ram_gated and unset for ram_naive).
    #[arg(long)]
    pub horizon: Option<u64>,

    /// Similarity temperature tau.
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,

    /// Use the running median neighbour distance as the temperature.
    #[arg(long)]
    pub adaptive_tau: bool,

    /// Similarity-gate fraction rho in [0, 1].
    #[arg(long, default_value_t = 0.1)]
    pub rho: f64,

    /// Gated-loss neighbour total weight alpha in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,

    /// Naive-loss neighbour weight beta >= 0.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,

    /// Learning rate.
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,

    /// Enable 1/sqrt(t) learning-rate decay.
    #[arg(long)]
    pub lr_decay: bool,

    /// Hidden layer width.
    #[arg(long, default_value_t = 64)]
    pub hidden: usize,

    /// Hidden activation: relu or tanh.
    #[arg(long, default_value = "relu")]
    pub activation: String,

    /// Disable past-only input standardization.
    #[arg(long)]
    pub no_standardize: bool,

    /// Keep raw surviving weights after the similarity gate instead of
    /// re-normalising them.
    #[arg(long)]
    pub no_renormalize_gate: bool,

    /// Monte-Carlo samples per boundary for the drift budget (synthetic runs).
    #[arg(long, default_value_t = 20_000)]
    pub drift_samples: usize,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Learning strategy: baseline, ram_naive or ram_gated.
    #[arg(long, default_value = "baseline")]
    pub variant: String,

    /// Ablation flags for ram_gated: any of no_time,no_sim,no_decay.
    #[arg(long, value_delimiter = ',')]
    pub ablation: Option<Vec<String>>,

    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',', default_value = "42")]
    pub seeds: Vec<u64>,

    /// Sliding window for curves and final accuracy.
    #[arg(long, default_value_t = 1000)]
    pub window: usize,

    /// Output directory root; each run gets its own subdirectory.
    #[arg(long, default_value = "runs")]
    pub out: std::path::PathBuf,

    /// Export a JSON snapshot of each learner's final memory buffer.
    #[arg(long)]
    pub dump_buffer: bool,

    /// Re-execute a recorded run: read every setting from this manifest
    /// (other flags except --out are ignored).
    #[arg(long)]
    pub manifest: Option<std::path::PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Single seed for the whole table.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 1000)]
    pub window: usize,

    #[arg(long, default_value = "runs")]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Variants to measure.
    #[arg(long, value_delimiter = ',', default_value = "baseline,ram_naive,ram_gated")]
    pub variants: Vec<String>,

    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,

    /// Timing repetitions per run (median taken).
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,

    #[arg(long, default_value_t = 1000)]
    pub window: usize,

    #[arg(long, default_value = "runs")]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// Synthetic stream spec (TOML regime list).
    #[arg(long)]
    pub spec: std::path::PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Output CSV path; the sidecar lands next to it.
    #[arg(long)]
    pub out: std::path::PathBuf,
}

#[derive(Args, Debug)]
pub struct TuneArgs {
    #[command(flatten)]
    pub source: SourceArgs,

    #[command(flatten)]
    pub hyper: HyperArgs,

    /// Validation prefix length in steps.
    #[arg(long, default_value_t = 5000)]
    pub prefix: usize,

    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    #[arg(long, default_value_t = 1000)]
    pub window: usize,

    #[arg(long, default_value = "runs")]
    pub out: std::path::PathBuf,
}
