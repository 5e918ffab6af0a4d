//! `plr bench`: the dataset × method × |S̄| × repeat grid with validation-based
//! hyperparameter selection, aggregated into tables and charts.
//!
//! Trials run on a worker pool. A single writer appends them to
//! `results.jsonl` in grid order whatever order they finish in, so the store
//! does not depend on the number of workers. Trials already in the store (or
//! in `failures.jsonl`) are skipped on the next invocation.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::mpsc;
use std::time::Instant;

use plr_core::data::{DatasetSchema, RawTable};
use plr_core::model::ModelKind;
use plr_core::report::{aggregate, cells_csv, degradation_svg, render_table, BenchReport, TableFormat, TrialResult};
use plr_core::trainer::{evaluate, select, EvalTarget, GridSpec, Method};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::manifest::{create_dir, write_json, Resolved, RunManifest};
use crate::pipeline::{prepare, DatasetRef, TrialSeeds};

pub const RESULTS_FILE: &str = "results.jsonl";
pub const FAILURES_FILE: &str = "failures.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub datasets: Vec<DatasetRef>,
    pub methods: Vec<Method>,
    pub num_false: Vec<usize>,
    pub repeats: usize,
    /// Repeat `r` uses seed `base_seed + r`.
    pub base_seed: u64,
    pub model: ModelKind,
    pub grid: GridSpec,
}

impl BenchConfig {
    pub fn validate(&self) -> CliResult<()> {
        let empty = |what: &str| Err(CliError::Input(format!("bench needs at least one {what}")));
        if self.datasets.is_empty() {
            return empty("dataset");
        }
        if self.methods.is_empty() {
            return empty("method");
        }
        if self.num_false.is_empty() {
            return empty("--num-false value");
        }
        if self.repeats == 0 {
            return empty("repeat");
        }
        if self.grid.learning_rates.is_empty() || self.grid.beta2.is_empty() || self.grid.huber_delta.is_empty() {
            return empty("value in every hyperparameter list");
        }
        Ok(())
    }

    /// Trials in grid order: dataset, |S̄|, method, repeat.
    pub fn trials(&self) -> Vec<TrialSpec> {
        let mut out = Vec::new();
        for (d, ds) in self.datasets.iter().enumerate() {
            for &k in &self.num_false {
                for &method in &self.methods {
                    for r in 0..self.repeats {
                        out.push(TrialSpec {
                            dataset: d,
                            dataset_name: ds.name.clone(),
                            method,
                            num_false: k,
                            seed: self.base_seed + r as u64,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialSpec {
    pub dataset: usize,
    pub dataset_name: String,
    pub method: Method,
    pub num_false: usize,
    pub seed: u64,
}

type TrialKey = (String, String, usize, u64);

impl TrialSpec {
    fn key(&self) -> TrialKey {
        (self.dataset_name.clone(), self.method.to_string(), self.num_false, self.seed)
    }
}

/// A trial whose every grid configuration failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub dataset: String,
    pub method: String,
    pub num_false: usize,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrialTiming {
    dataset: String,
    method: String,
    num_false: usize,
    seed: u64,
    seconds: f64,
}

enum TrialRecord {
    Done(TrialResult),
    Failed(TrialFailure),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BenchStats {
    pub run: usize,
    pub skipped: usize,
    pub failed: usize,
}

fn run_trial(spec: &TrialSpec, table: &RawTable, schema: &DatasetSchema, config: &BenchConfig) -> TrialRecord {
    let attempt = || -> CliResult<TrialResult> {
        let seeds = TrialSeeds::new(spec.seed, spec.num_false);
        let data = prepare(table, schema, spec.num_false, &seeds)?;
        let grid = spec.method.grid(&config.grid, config.model, seeds.fit)?;
        let sel = select(&grid, &data.train, &data.validation)?;
        let test_mse = evaluate(&sel.outcome.model, &data.test, EvalTarget::TrueLabels)?;
        Ok(TrialResult {
            dataset: spec.dataset_name.clone(),
            method: spec.method.to_string(),
            num_false: spec.num_false,
            seed: spec.seed,
            test_mse,
            validation_metric: sel.outcome.final_validation(),
            selected: sel.config.describe(),
            runtime_seconds: None,
        })
    };
    match attempt() {
        Ok(r) => TrialRecord::Done(r),
        Err(e) => TrialRecord::Failed(TrialFailure {
            dataset: spec.dataset_name.clone(),
            method: spec.method.to_string(),
            num_false: spec.num_false,
            seed: spec.seed,
            error: e.to_string(),
        }),
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line)
                .map_err(|e| CliError::Input(format!("{}: line {}: {e}", path.display(), i + 1)))?,
        );
    }
    Ok(out)
}

pub fn read_results(dir: &Path) -> CliResult<Vec<TrialResult>> {
    read_jsonl(&dir.join(RESULTS_FILE))
}

pub fn read_failures(dir: &Path) -> CliResult<Vec<TrialFailure>> {
    read_jsonl(&dir.join(FAILURES_FILE))
}

fn append(path: &Path) -> CliResult<File> {
    OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

fn write_line<T: Serialize>(file: &mut File, value: &T) -> CliResult<()> {
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()?;
    Ok(())
}

/// Runs every trial not yet recorded in `dir`, appending to the stores.
pub fn run_trials(config: &BenchConfig, dir: &Path, workers: usize) -> CliResult<BenchStats> {
    config.validate()?;
    let tables = config
        .datasets
        .iter()
        .map(|d| d.load())
        .collect::<CliResult<Vec<_>>>()?;
    create_dir(dir)?;

    let mut done: HashSet<TrialKey> = HashSet::new();
    for r in read_results(dir)? {
        done.insert((r.dataset, r.method, r.num_false, r.seed));
    }
    for f in read_failures(dir)? {
        done.insert((f.dataset, f.method, f.num_false, f.seed));
    }
    let all = config.trials();
    let pending: Vec<TrialSpec> = all.iter().filter(|t| !done.contains(&t.key())).cloned().collect();
    let mut stats = BenchStats {
        skipped: all.len() - pending.len(),
        ..BenchStats::default()
    };
    if pending.is_empty() {
        return Ok(stats);
    }

    let mut results = append(&dir.join(RESULTS_FILE))?;
    let mut failures = append(&dir.join(FAILURES_FILE))?;
    let mut timings = append(&dir.join(TIMINGS_FILE))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<(usize, TrialRecord, f64)>();
    let written = std::thread::scope(|s| {
        let writer = s.spawn(|| -> CliResult<(usize, usize)> {
            let mut buffer = BTreeMap::new();
            let mut next = 0usize;
            let (mut ok, mut failed) = (0, 0);
            for (i, rec, seconds) in rx {
                buffer.insert(i, (rec, seconds));
                while let Some((rec, seconds)) = buffer.remove(&next) {
                    let spec = &pending[next];
                    match rec {
                        TrialRecord::Done(r) => {
                            write_line(&mut results, &r)?;
                            ok += 1;
                        }
                        TrialRecord::Failed(f) => {
                            write_line(&mut failures, &f)?;
                            failed += 1;
                        }
                    }
                    write_line(
                        &mut timings,
                        &TrialTiming {
                            dataset: spec.dataset_name.clone(),
                            method: spec.method.to_string(),
                            num_false: spec.num_false,
                            seed: spec.seed,
                            seconds,
                        },
                    )?;
                    next += 1;
                }
            }
            Ok((ok, failed))
        });
        pool.install(|| {
            pending.par_iter().enumerate().for_each_with(tx, |tx, (i, spec)| {
                let start = Instant::now();
                let (table, schema) = &tables[spec.dataset];
                let rec = run_trial(spec, table, schema, config);
                let _ = tx.send((i, rec, start.elapsed().as_secs_f64()));
            });
        });
        writer.join().expect("writer thread panicked")
    })?;
    stats.run = written.0 + written.1;
    stats.failed = written.1;
    Ok(stats)
}

/// Aggregates the store and writes tables, charts and `report.json`.
pub fn write_report(config: &BenchConfig, dir: &Path) -> CliResult<(BenchReport, Vec<String>)> {
    let trials = read_results(dir)?;
    let mut report = aggregate(&trials)?;
    report.metadata.config_hash = Some(Resolved::Bench(config.clone()).hash());
    report.metadata.git_hash = git_hash();
    report.metadata.timestamp = Some(
        std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default(),
    );
    let mut outputs = Vec::new();
    let mut put = |name: String, text: String| -> CliResult<()> {
        std::fs::write(dir.join(&name), text)?;
        outputs.push(name);
        Ok(())
    };
    put("table.md".into(), render_table(&report, TableFormat::Markdown)?)?;
    put("table.csv".into(), render_table(&report, TableFormat::Csv)?)?;
    put("cells.csv".into(), cells_csv(&report)?)?;
    for d in report.datasets() {
        if let Some(svg) = degradation_svg(&report, &d) {
            put(format!("degradation-{d}.svg"), svg)?;
        }
    }
    write_json(&dir.join("report.json"), &report)?;
    outputs.push("report.json".into());
    Ok((report, outputs))
}

fn git_hash() -> Option<String> {
    let out = std::process::Command::new("git").args(["rev-parse", "HEAD"]).output().ok()?;
    out.status
        .success()
        .then(|| String::from_utf8_lossy(&out.stdout).trim().to_string())
        .filter(|s| !s.is_empty())
}

/// Cells of the configured grid without any successful trial.
pub fn missing_cells(config: &BenchConfig, report: Option<&BenchReport>) -> Vec<String> {
    let mut missing = Vec::new();
    for d in &config.datasets {
        for &k in &config.num_false {
            for m in &config.methods {
                let name = m.to_string();
                if report.and_then(|r| r.cell(&d.name, &name, k)).is_none() {
                    missing.push(format!("{}/{}/{}", d.name, name, k));
                }
            }
        }
    }
    missing
}

pub fn run(config: &BenchConfig, dir: &Path, workers: usize) -> CliResult<String> {
    let stats = run_trials(config, dir, workers)?;
    let mut outputs = vec![RESULTS_FILE.to_string(), FAILURES_FILE.to_string(), TIMINGS_FILE.to_string()];
    let report = if read_results(dir)?.is_empty() {
        None
    } else {
        let (report, files) = write_report(config, dir)?;
        outputs.extend(files);
        Some(report)
    };
    RunManifest::new(Resolved::Bench(config.clone()), dir, outputs)?.write()?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "trials: {} run ({} failed), {} already recorded",
        stats.run, stats.failed, stats.skipped
    );
    if let Some(r) = &report {
        out.push('\n');
        out.push_str(&render_table(r, TableFormat::Markdown)?);
        out.push('\n');
    }
    let _ = writeln!(out, "written to {}", dir.display());
    let missing = missing_cells(config, report.as_ref());
    if !missing.is_empty() {
        return Err(CliError::BenchFailure(format!(
            "no successful trial for {} (see {})\n{out}",
            missing.join(", "),
            dir.join(FAILURES_FILE).display()
        )));
    }
    Ok(out)
}
