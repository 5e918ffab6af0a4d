use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use plr_core::model::ModelKind;
use plr_core::trainer::{GridSpec, LossKind, Method, Scheme, ValidationMetric};

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "plr", version, about = "Regression from candidate-label sets: data corruption, training and benchmarks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split a CSV dataset and write train/validation/test candidate-set files.
    Corrupt(CorruptArgs),
    /// Fit one model on files written by `corrupt`.
    Train(TrainArgs),
    /// Run the dataset × method × |S̄| grid over several seeds and report.
    Bench(BenchArgs),
    /// Test error as a function of the amount of training data.
    Scaling(ScalingArgs),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct CorruptArgs {
    /// CSV file with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// Schema JSON; defaults to `<stem>.schema.json` beside the CSV.
    #[arg(long)]
    pub schema: Option<PathBuf>,
    /// False labels added to each candidate set.
    #[arg(long, default_value_t = 4)]
    pub num_false: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory; defaults to `$PLR_BENCH_OUT/corrupt-<hash>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// `linear` or `mlp`.
    #[arg(long, default_value = "mlp")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 256)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1000)]
    pub epochs: usize,
    /// `partial_min` (closest candidate) or `true_mse`.
    #[arg(long, default_value = "partial_min")]
    pub validation_metric: ValidationMetric,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directory written by `plr corrupt`.
    #[arg(long)]
    pub data: PathBuf,
    /// supervised, avgl, avgv, ident, pident, or a full name such as avgl-mae.
    #[arg(long)]
    pub method: String,
    /// Base loss for methods given without a suffix.
    #[arg(long, default_value = "mse")]
    pub loss: LossKind,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 0.5)]
    pub beta1: f64,
    #[arg(long, default_value_t = 100.0)]
    pub beta2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub huber_delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip writing `model.json`.
    #[arg(long)]
    pub no_checkpoint: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.001")]
    pub lr: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub beta1: f64,
    #[arg(long, value_delimiter = ',', default_value = "10,100,500,1000,10000")]
    pub beta2: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,5")]
    pub huber_delta: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// CSV files; repeat the flag or separate with commas.
    #[arg(long, value_delimiter = ',', required = true)]
    pub data: Vec<PathBuf>,
    /// Schemas, one per `--data` in the same order.
    #[arg(long, value_delimiter = ',')]
    pub schema: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub method: Vec<String>,
    #[arg(long, default_value = "mse")]
    pub loss: LossKind,
    #[arg(long, value_delimiter = ',', default_value = "2,4,8,16")]
    pub num_false: Vec<usize>,
    #[arg(long, default_value_t = 10)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    /// Run directory; defaults to `$PLR_BENCH_OUT/bench-<hash>`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub schema: Option<PathBuf>,
    #[arg(long, default_value = "ident")]
    pub method: String,
    #[arg(long, default_value = "mse")]
    pub loss: LossKind,
    #[arg(long, default_value_t = 4)]
    pub num_false: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0")]
    pub fractions: Vec<f64>,
    #[arg(long, default_value_t = 5)]
    pub repeats: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A `manifest.json` written by an earlier run.
    pub manifest: PathBuf,
    /// Write to this directory instead of the recorded one.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub workers: Option<usize>,
}

/// A full method name (`avgl-mae`, `IDent`) or a bare scheme combined with `loss`.
pub fn resolve_method(name: &str, loss: LossKind) -> CliResult<Method> {
    let bad = |e: plr_core::Error| CliError::Input(e.to_string());
    if name.contains('-') {
        return name.parse::<Method>().map_err(bad);
    }
    let scheme: Scheme = name.parse().map_err(bad)?;
    Ok(Method::new(scheme, loss))
}

impl ModelArgs {
    pub fn grid(&self, g: &GridArgs) -> GridSpec {
        GridSpec {
            learning_rates: g.lr.clone(),
            beta1: g.beta1,
            beta2: g.beta2.clone(),
            huber_delta: g.huber_delta.clone(),
            batch_size: self.batch_size,
            epochs: self.epochs,
            validation_metric: self.validation_metric,
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}
