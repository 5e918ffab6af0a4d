//! `plr scaling`: test error against the fraction of partial-label training
//! data used.

use std::fmt::Write as _;
use std::path::Path;

use plr_core::model::ModelKind;
use plr_core::numeric::Rng;
use plr_core::report::{emit_scaling_curve, format_2dp, ScalingPoint};
use plr_core::trainer::{evaluate, select, EvalTarget, GridSpec, Method};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{create_dir, Resolved, RunManifest};
use crate::pipeline::{prepare, DatasetRef, TrialSeeds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingConfig {
    pub dataset: DatasetRef,
    pub method: Method,
    pub num_false: usize,
    /// Strictly increasing, each in (0, 1].
    pub fractions: Vec<f64>,
    pub repeats: usize,
    pub base_seed: u64,
    pub model: ModelKind,
    pub grid: GridSpec,
}

impl ScalingConfig {
    /// Sorts and deduplicates `fractions`, rejecting values outside (0, 1].
    pub fn normalize_fractions(fractions: &[f64]) -> CliResult<Vec<f64>> {
        if fractions.is_empty() {
            return Err(CliError::Input("at least one fraction is needed".into()));
        }
        if let Some(bad) = fractions.iter().find(|f| !(**f > 0.0 && **f <= 1.0)) {
            return Err(CliError::Input(format!("fraction {bad} is outside (0, 1]")));
        }
        let mut out = fractions.to_vec();
        out.sort_by(f64::total_cmp);
        out.dedup();
        Ok(out)
    }

    pub fn validate(&self) -> CliResult<()> {
        let normalized = Self::normalize_fractions(&self.fractions)?;
        if normalized != self.fractions {
            return Err(CliError::Input("fractions must be strictly increasing".into()));
        }
        if self.repeats == 0 {
            return Err(CliError::Input("scaling needs at least one repeat".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingTrial {
    pub fraction: f64,
    pub seed: u64,
    pub n_train: usize,
    pub test_mse: f64,
    pub validation_metric: f64,
    pub selected: String,
}

/// Number of training examples kept for a fraction; at least one.
pub fn subsample_size(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64).round() as usize).clamp(1, n)
}

fn run_one(
    config: &ScalingConfig,
    table: &plr_core::data::RawTable,
    schema: &plr_core::data::DatasetSchema,
    seed: u64,
    fraction: f64,
) -> CliResult<ScalingTrial> {
    let seeds = TrialSeeds::new(seed, config.num_false);
    let data = prepare(table, schema, config.num_false, &seeds)?;
    let n = data.train.len();
    // one permutation per seed: smaller fractions are prefixes of larger ones
    let order = Rng::new(seeds.subsample, 0).permutation(n);
    let mut idx = order[..subsample_size(n, fraction)].to_vec();
    idx.sort_unstable();
    let train = data.train.subset(&idx);
    let grid = config.method.grid(&config.grid, config.model, seeds.fit)?;
    let sel = select(&grid, &train, &data.validation)?;
    Ok(ScalingTrial {
        fraction,
        seed,
        n_train: idx.len(),
        test_mse: evaluate(&sel.outcome.model, &data.test, EvalTarget::TrueLabels)?,
        validation_metric: sel.outcome.final_validation(),
        selected: sel.config.describe(),
    })
}

/// Mean and sample standard deviation of the test MSE per fraction.
pub fn curve(fractions: &[f64], trials: &[ScalingTrial]) -> Vec<ScalingPoint> {
    fractions
        .iter()
        .map(|&f| {
            let v: Vec<f64> = trials.iter().filter(|t| t.fraction == f).map(|t| t.test_mse).collect();
            let (mean, std) = match plr_core::numeric::mean_std(&v) {
                Ok(ms) => ms,
                Err(_) => (v.first().copied().unwrap_or(f64::NAN), 0.0),
            };
            ScalingPoint {
                fraction: f,
                mean_mse: mean,
                std,
            }
        })
        .collect()
}

pub fn run(config: &ScalingConfig, dir: &Path, workers: usize) -> CliResult<String> {
    config.validate()?;
    let (table, schema) = config.dataset.load()?;
    let jobs: Vec<(u64, f64)> = (0..config.repeats as u64)
        .flat_map(|r| config.fractions.iter().map(move |&f| (config.base_seed + r, f)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let results: Vec<CliResult<ScalingTrial>> = pool.install(|| {
        jobs.par_iter()
            .map(|&(seed, f)| run_one(config, &table, &schema, seed, f))
            .collect()
    });
    let trials = results.into_iter().collect::<CliResult<Vec<_>>>()?;

    create_dir(dir)?;
    let mut lines = String::new();
    for t in &trials {
        lines.push_str(&serde_json::to_string(t)?);
        lines.push('\n');
    }
    std::fs::write(dir.join("trials.jsonl"), lines)?;
    let points = curve(&config.fractions, &trials);
    emit_scaling_curve(&points, dir, "scaling")?;
    let outputs = vec!["trials.jsonl".into(), "scaling.csv".into(), "scaling.svg".into()];
    RunManifest::new(Resolved::Scaling(config.clone()), dir, outputs)?.write()?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} on {} with {} false labels, {} repeats",
        config.method, config.dataset.name, config.num_false, config.repeats
    );
    let _ = writeln!(out, "fraction  mean MSE  std");
    for p in &points {
        let _ = writeln!(out, "{:<9} {:<9} {}", p.fraction, format_2dp(p.mean_mse), format_2dp(p.std));
    }
    let _ = writeln!(out, "written to {}", dir.display());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fractions_are_sorted_and_checked() {
        assert_eq!(ScalingConfig::normalize_fractions(&[1.0, 0.2, 0.2]).unwrap(), vec![0.2, 1.0]);
        for bad in [&[0.0, 0.5][..], &[1.5], &[f64::NAN], &[]] {
            assert_eq!(ScalingConfig::normalize_fractions(bad).unwrap_err().exit_code(), 2);
        }
    }

    #[test]
    fn subsample_keeps_at_least_one_example() {
        assert_eq!(subsample_size(618, 0.2), 124);
        assert_eq!(subsample_size(618, 1.0), 618);
        assert_eq!(subsample_size(3, 0.01), 1);
    }

    #[test]
    fn curve_averages_per_fraction() {
        let t = |fraction, seed, test_mse| ScalingTrial {
            fraction,
            seed,
            n_train: 1,
            test_mse,
            validation_metric: 0.0,
            selected: String::new(),
        };
        let pts = curve(&[0.5, 1.0], &[t(0.5, 0, 4.0), t(1.0, 0, 1.0), t(0.5, 1, 6.0), t(1.0, 1, 1.0)]);
        assert_eq!((pts[0].mean_mse, pts[1].mean_mse, pts[1].std), (5.0, 1.0, 0.0));
        assert!((pts[0].std - 2f64.sqrt()).abs() < 1e-12);
    }
}
