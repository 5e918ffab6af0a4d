//! Run manifests: the fully resolved configuration of a command, hashes of
//! its inputs and the files it produced.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bench::BenchConfig;
use crate::corrupt::CorruptConfig;
use crate::error::{CliError, CliResult};
use crate::scaling::ScalingConfig;
use crate::train::TrainCommand;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const OUT_ROOT_ENV: &str = "PLR_BENCH_OUT";
const DEFAULT_OUT_ROOT: &str = "runs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "lowercase")]
pub enum Resolved {
    Corrupt(CorruptConfig),
    Train(TrainCommand),
    Bench(BenchConfig),
    Scaling(ScalingConfig),
}

impl Resolved {
    pub fn name(&self) -> &'static str {
        match self {
            Resolved::Corrupt(_) => "corrupt",
            Resolved::Train(_) => "train",
            Resolved::Bench(_) => "bench",
            Resolved::Scaling(_) => "scaling",
        }
    }

    /// First 16 hex digits of the SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))[..16].to_string()
    }

    pub fn base_seed(&self) -> u64 {
        match self {
            Resolved::Corrupt(c) => c.seed,
            Resolved::Train(c) => c.seed,
            Resolved::Bench(c) => c.base_seed,
            Resolved::Scaling(c) => c.base_seed,
        }
    }

    pub fn input_paths(&self) -> Vec<PathBuf> {
        match self {
            Resolved::Corrupt(c) => vec![c.dataset.data.clone(), c.dataset.schema.clone()],
            Resolved::Train(c) => crate::train::input_files(&c.data),
            Resolved::Bench(c) => c
                .datasets
                .iter()
                .flat_map(|d| [d.data.clone(), d.schema.clone()])
                .collect(),
            Resolved::Scaling(c) => vec![c.dataset.data.clone(), c.dataset.schema.clone()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub resolved: Resolved,
    pub config_hash: String,
    pub base_seed: u64,
    pub inputs: Vec<InputFile>,
    pub run_dir: PathBuf,
    /// Files written by the run, relative to `run_dir`.
    pub outputs: Vec<String>,
    pub created_unix: u64,
}

impl RunManifest {
    pub fn new(resolved: Resolved, run_dir: &Path, outputs: Vec<String>) -> CliResult<Self> {
        let inputs = resolved
            .input_paths()
            .into_iter()
            .map(|path| {
                let sha256 = sha256_file(&path)?;
                Ok(InputFile { path, sha256 })
            })
            .collect::<CliResult<Vec<_>>>()?;
        Ok(Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash: resolved.hash(),
            base_seed: resolved.base_seed(),
            resolved,
            inputs,
            run_dir: run_dir.to_path_buf(),
            outputs,
            created_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        })
    }

    pub fn write(&self) -> CliResult<PathBuf> {
        let path = self.run_dir.join(MANIFEST_FILE);
        write_json(&path, self)?;
        Ok(path)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    /// Fails when an input file changed since the manifest was written.
    pub fn verify_inputs(&self) -> CliResult<()> {
        for input in &self.inputs {
            let now = sha256_file(&input.path)?;
            if now != input.sha256 {
                return Err(CliError::Input(format!(
                    "{} changed since the manifest was written",
                    input.path.display()
                )));
            }
        }
        Ok(())
    }
}

pub fn sha256_file(path: &Path) -> CliResult<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

/// `out` if given, otherwise `<root>/<command>-<hash>` where the root comes
/// from `PLR_BENCH_OUT` and defaults to `runs`.
pub fn run_dir(out: Option<&Path>, resolved: &Resolved) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os(OUT_ROOT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_ROOT));
            root.join(format!("{}-{}", resolved.name(), resolved.hash()))
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}

pub fn create_dir(path: &Path) -> CliResult<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::Internal(format!("{}: {e}", path.display())))
}
