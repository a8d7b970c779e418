use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sqlforecast_core::learn::train::ModelKind;
use sqlforecast_core::workload::{FormatSpec, Setting, Task};

#[derive(Debug, Parser)]
#[command(name = "sqlforecast", version, about = "Predict properties of SQL queries before they run")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse, sessionize, sample, deduplicate and split a workload log.
    Ingest(IngestArgs),
    /// Syntactic profiles, their correlation matrix and summaries.
    Profile(ProfileArgs),
    /// Grid-search one model kind and keep the best on validation loss.
    Train(TrainArgs),
    /// Score a trained bundle on one part of a dataset.
    Evaluate(EvaluateArgs),
    /// Predict one statement with one bundle per task.
    Predict(PredictArgs),
    /// Serve predictions over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct WorkloadArgs {
    /// Raw query log (CSV or TSV with a header row).
    #[arg(long)]
    pub workload: PathBuf,
    #[arg(long, default_value = "csv")]
    pub format: FormatSpec,
    #[arg(long, default_value = "homogeneous_instance")]
    pub setting: Setting,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: WorkloadArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ProfileArgs {
    /// `dataset.json` written by `ingest`.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TrainArgs {
    /// `dataset.json` written by `ingest`.
    #[arg(long, conflicts_with = "workload", required_unless_present = "workload")]
    pub dataset: Option<PathBuf>,
    /// Raw workload, ingested on the fly with the same seed.
    #[arg(long)]
    pub workload: Option<PathBuf>,
    #[arg(long, default_value = "csv")]
    pub format: FormatSpec,
    #[arg(long, default_value = "homogeneous_instance")]
    pub setting: Setting,
    #[arg(long)]
    pub task: Task,
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,

    /// Token embedding sizes to try.
    #[arg(long, value_delimiter = ',')]
    pub embed_dim: Vec<usize>,
    /// CNN kernels per window size.
    #[arg(long, value_delimiter = ',')]
    pub kernels: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dropout: Vec<f64>,
    /// LSTM hidden sizes.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Vec<usize>,
    /// Gradient clipping norms; 0 disables clipping.
    #[arg(long, value_delimiter = ',')]
    pub clip: Vec<f64>,
    #[arg(long, default_value_t = 3)]
    pub layers: usize,
    /// TFIDF feature count or token vocabulary cap.
    #[arg(long)]
    pub vocab_size: Option<usize>,
    #[arg(long)]
    pub max_len: Option<usize>,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 5)]
    pub patience: usize,
    #[arg(long, default_value_t = 16)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub learning_rate: f64,
    /// Accept grid values outside the published sets.
    #[arg(long)]
    pub allow_custom: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Train,
    Validation,
    Test,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct EvaluateArgs {
    /// Bundle path (the `.json`/`.bin` pair, extension optional).
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    pub part: Part,
    #[arg(long, value_delimiter = ',', default_value = "50,75,80,85,90,95")]
    pub percentiles: Vec<f64>,
    /// `session_class` or `<property>[:<buckets>]`; repeatable.
    #[arg(long)]
    pub breakdown: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PredictArgs {
    /// One bundle per task; repeatable.
    #[arg(long, required = true)]
    pub bundle: Vec<PathBuf>,
    /// Statement text; read from stdin when absent.
    #[arg(long)]
    pub statement: Option<String>,
    /// Optimizer cost estimate, used only by `opt` bundles.
    #[arg(long)]
    pub opt_cost: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ServeArgs {
    #[arg(long, required = true)]
    pub bundle: Vec<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}
