//! `plr train`: one fit on files written by `plr corrupt`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use plr_core::data::{PartialDataset, SplitTag};
use plr_core::model::ModelKind;
use plr_core::trainer::{evaluate, fit, EvalTarget, Method, TrainConfig, ValidationMetric};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{create_dir, write_json, Resolved, RunManifest};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainCommand {
    /// Directory holding `train.jsonl`, `validation.jsonl` and `test.jsonl`.
    pub data: PathBuf,
    pub method: Method,
    pub model: ModelKind,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub huber_delta: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_metric: ValidationMetric,
    pub checkpoint: bool,
}

impl TrainCommand {
    pub fn train_config(&self) -> CliResult<TrainConfig> {
        let loss = self.method.plr_loss(self.beta1, self.beta2, self.huber_delta)?;
        let config = TrainConfig {
            model_kind: self.model,
            loss,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            validation_metric: self.validation_metric,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Contents of `fit.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub method: String,
    pub config: TrainConfig,
    pub train_loss: Vec<f64>,
    pub validation_metric: Vec<f64>,
    pub final_train_loss: f64,
    pub final_validation: f64,
    pub test_mse: f64,
    pub model_path: Option<PathBuf>,
}

pub fn input_files(dir: &Path) -> Vec<PathBuf> {
    [SplitTag::Train, SplitTag::Validation, SplitTag::Test]
        .iter()
        .map(|t| dir.join(format!("{}.jsonl", t.file_stem())))
        .collect()
}

pub fn run(cmd: &TrainCommand, dir: &Path) -> CliResult<String> {
    let config = cmd.train_config()?;
    let load = |tag: SplitTag| PartialDataset::load_jsonl(&cmd.data.join(format!("{}.jsonl", tag.file_stem())), tag);
    let train = load(SplitTag::Train)?;
    let validation = load(SplitTag::Validation)?;
    let test = load(SplitTag::Test)?;
    if test.dim() != train.dim() {
        return Err(CliError::Input(format!(
            "test features have {} columns, training features {}",
            test.dim(),
            train.dim()
        )));
    }

    let outcome = fit(&config, &train, &validation)?;
    let test_mse = evaluate(&outcome.model, &test, EvalTarget::TrueLabels)?;

    create_dir(dir)?;
    let mut outputs = vec!["fit.json".to_string()];
    let model_path = if cmd.checkpoint {
        let p = dir.join("model.json");
        outcome.model.save(&p)?;
        outputs.push("model.json".into());
        Some(p)
    } else {
        None
    };
    let record = FitRecord {
        method: cmd.method.to_string(),
        config,
        final_train_loss: *outcome.train_loss.last().expect("epochs >= 1"),
        final_validation: outcome.final_validation(),
        train_loss: outcome.train_loss,
        validation_metric: outcome.validation_metric,
        test_mse,
        model_path,
    };
    write_json(&dir.join("fit.json"), &record)?;
    write_json(&dir.join("timing.json"), &serde_json::json!({ "seconds": outcome.seconds }))?;
    outputs.push("timing.json".into());
    RunManifest::new(Resolved::Train(cmd.clone()), dir, outputs)?.write()?;

    let metric = crate::metric_name(cmd.validation_metric);
    let mut out = String::new();
    let _ = writeln!(out, "method:            {} ({})", record.method, record.config.describe());
    let _ = writeln!(out, "final train loss:  {}", record.final_train_loss);
    let _ = writeln!(out, "validation ({metric}): {}", record.final_validation);
    let _ = writeln!(out, "test MSE:          {test_mse}");
    let _ = writeln!(out, "written to {}", dir.display());
    Ok(out)
}
