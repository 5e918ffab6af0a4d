//! `plr corrupt`: split a CSV dataset and write candidate-set files.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliResult;
use crate::manifest::{create_dir, write_json, Resolved, RunManifest};
use crate::pipeline::{prepare, DatasetRef, TrialSeeds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptConfig {
    pub dataset: DatasetRef,
    pub num_false: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorruptSummary {
    pub dataset: String,
    pub num_false: usize,
    pub span: (f64, f64),
    pub dim: usize,
    pub train: usize,
    pub validation: usize,
    pub test: usize,
    pub warnings: Vec<String>,
}

pub fn run(config: &CorruptConfig, dir: &Path) -> CliResult<String> {
    let (table, schema) = config.dataset.load()?;
    let seeds = TrialSeeds::new(config.seed, config.num_false);
    let prepared = prepare(&table, &schema, config.num_false, &seeds)?;
    create_dir(dir)?;
    let mut outputs = Vec::new();
    for ds in [&prepared.train, &prepared.validation, &prepared.test] {
        let name = format!("{}.jsonl", ds.split().file_stem());
        ds.save_jsonl(&dir.join(&name))?;
        outputs.push(name);
    }
    write_json(&dir.join("transform.json"), &prepared.transform)?;
    outputs.push("transform.json".into());
    let summary = CorruptSummary {
        dataset: config.dataset.name.clone(),
        num_false: config.num_false,
        span: prepared.corruption.span,
        dim: prepared.train.dim(),
        train: prepared.train.len(),
        validation: prepared.validation.len(),
        test: prepared.test.len(),
        warnings: prepared.transform.warnings.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    outputs.push("summary.json".into());
    RunManifest::new(Resolved::Corrupt(config.clone()), dir, outputs)?.write()?;

    let mut out = String::new();
    let _ = writeln!(out, "dataset:     {}", summary.dataset);
    let _ = writeln!(
        out,
        "sizes:       train {} / validation {} / test {}",
        summary.train, summary.validation, summary.test
    );
    let _ = writeln!(out, "features:    {}", summary.dim);
    let _ = writeln!(out, "label span:  [{}, {}]", summary.span.0, summary.span.1);
    let _ = writeln!(out, "false labels per set: {}", summary.num_false);
    for w in &summary.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    let _ = writeln!(out, "written to {}", dir.display());
    Ok(out)
}
