//! Command implementations behind the `plr` binary.
//!
//! Every command resolves its arguments into a serializable configuration,
//! writes its outputs into a run directory and records a [`RunManifest`]
//! there. `plr replay <manifest>` runs the same configuration again.

pub mod args;
pub mod bench;
pub mod corrupt;
pub mod error;
pub mod manifest;
pub mod pipeline;
pub mod scaling;
pub mod train;

use std::path::{Path, PathBuf};

use args::{default_workers, resolve_method, Cli, Command};
use plr_core::trainer::ValidationMetric;

pub use error::{CliError, CliResult};
pub use manifest::{Resolved, RunManifest};

use bench::BenchConfig;
use corrupt::CorruptConfig;
use pipeline::DatasetRef;
use scaling::ScalingConfig;
use train::TrainCommand;

/// A command with every default filled in, plus where it writes.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub resolved: Resolved,
    pub dir: PathBuf,
    pub workers: usize,
}

pub fn resolve(cli: Cli) -> CliResult<Invocation> {
    let (resolved, out, workers) = match cli.command {
        Command::Corrupt(a) => (
            Resolved::Corrupt(CorruptConfig {
                dataset: DatasetRef::resolve(&a.data, a.schema.as_deref())?,
                num_false: a.num_false,
                seed: a.seed,
            }),
            a.out,
            1,
        ),
        Command::Train(a) => (
            Resolved::Train(TrainCommand {
                data: a.data,
                method: resolve_method(&a.method, a.loss)?,
                model: a.model.model,
                learning_rate: a.lr,
                beta1: a.beta1,
                beta2: a.beta2,
                huber_delta: a.huber_delta,
                batch_size: a.model.batch_size,
                epochs: a.model.epochs,
                seed: a.seed,
                validation_metric: a.model.validation_metric,
                checkpoint: !a.no_checkpoint,
            }),
            a.out,
            1,
        ),
        Command::Bench(a) => {
            if !a.schema.is_empty() && a.schema.len() != a.data.len() {
                return Err(CliError::Input(format!(
                    "{} --schema values for {} --data files",
                    a.schema.len(),
                    a.data.len()
                )));
            }
            let datasets = a
                .data
                .iter()
                .enumerate()
                .map(|(i, d)| DatasetRef::resolve(d, a.schema.get(i).map(PathBuf::as_path)))
                .collect::<CliResult<Vec<_>>>()?;
            let methods = a
                .method
                .iter()
                .map(|m| resolve_method(m, a.loss))
                .collect::<CliResult<Vec<_>>>()?;
            let config = BenchConfig {
                datasets,
                methods,
                num_false: a.num_false,
                repeats: a.repeats,
                base_seed: a.seed,
                model: a.model.model,
                grid: a.model.grid(&a.grid),
            };
            config.validate()?;
            (Resolved::Bench(config), a.out, a.workers.unwrap_or_else(default_workers))
        }
        Command::Scaling(a) => {
            let config = ScalingConfig {
                dataset: DatasetRef::resolve(&a.data, a.schema.as_deref())?,
                method: resolve_method(&a.method, a.loss)?,
                num_false: a.num_false,
                fractions: ScalingConfig::normalize_fractions(&a.fractions)?,
                repeats: a.repeats,
                base_seed: a.seed,
                model: a.model.model,
                grid: a.model.grid(&a.grid),
            };
            config.validate()?;
            (Resolved::Scaling(config), a.out, a.workers.unwrap_or_else(default_workers))
        }
        Command::Replay(a) => {
            let manifest = RunManifest::load(&a.manifest)?;
            manifest.verify_inputs()?;
            let dir = a.out.unwrap_or(manifest.run_dir);
            return Ok(Invocation {
                resolved: manifest.resolved,
                dir,
                workers: a.workers.unwrap_or_else(default_workers),
            });
        }
    };
    let dir = manifest::run_dir(out.as_deref(), &resolved);
    Ok(Invocation { resolved, dir, workers })
}

/// Runs a resolved command and returns its human-readable summary.
pub fn execute(resolved: &Resolved, dir: &Path, workers: usize) -> CliResult<String> {
    match resolved {
        Resolved::Corrupt(c) => corrupt::run(c, dir),
        Resolved::Train(c) => train::run(c, dir),
        Resolved::Bench(c) => bench::run(c, dir, workers),
        Resolved::Scaling(c) => scaling::run(c, dir, workers),
    }
}

pub fn run(cli: Cli) -> CliResult<String> {
    let inv = resolve(cli)?;
    execute(&inv.resolved, &inv.dir, inv.workers)
}

pub fn metric_name(m: ValidationMetric) -> &'static str {
    match m {
        ValidationMetric::PartialMin => "partial_min",
        ValidationMetric::TrueMse => "true_mse",
    }
}
