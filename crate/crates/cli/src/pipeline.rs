//! Dataset preparation shared by every command: load, split, preprocess, corrupt.

use std::path::{Path, PathBuf};

use plr_core::data::{
    load_csv, preprocess, split, CorruptionConfig, DatasetSchema, FittedTransform, PartialDataset, RawTable,
    SplitTag, DEFAULT_FRACTIONS,
};
use plr_core::numeric::{seed_for, Rng};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// A CSV file and the schema describing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetRef {
    pub name: String,
    pub data: PathBuf,
    pub schema: PathBuf,
}

impl DatasetRef {
    /// Without an explicit schema, looks for `<stem>.schema.json` next to the CSV.
    pub fn resolve(data: &Path, schema: Option<&Path>) -> CliResult<Self> {
        let stem = data
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| CliError::Input(format!("cannot name dataset `{}`", data.display())))?;
        let schema = match schema {
            Some(s) => s.to_path_buf(),
            None => data.with_file_name(format!("{stem}.schema.json")),
        };
        Ok(Self {
            name: stem.to_string(),
            data: data.to_path_buf(),
            schema,
        })
    }

    pub fn load(&self) -> CliResult<(RawTable, DatasetSchema)> {
        let schema = DatasetSchema::load(&self.schema)?;
        let table = load_csv(&self.data, &schema)?;
        Ok((table, schema))
    }
}

/// Seeds for the random steps of one trial, all derived from the trial seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub split: u64,
    pub corrupt: u64,
    pub fit: u64,
    pub subsample: u64,
}

impl TrialSeeds {
    /// The split depends on the seed only, so every |S̄| sees the same
    /// train/validation/test partition.
    pub fn new(seed: u64, num_false: usize) -> Self {
        let k = num_false as u64;
        Self {
            split: seed_for(&[seed, 0]),
            corrupt: seed_for(&[seed, 1, k]),
            fit: seed_for(&[seed, 2, k]),
            subsample: seed_for(&[seed, 3, k]),
        }
    }
}

pub struct Prepared {
    pub train: PartialDataset,
    pub validation: PartialDataset,
    pub test: PartialDataset,
    pub transform: FittedTransform,
    pub corruption: CorruptionConfig,
}

/// Splits 60/20/20, fits preprocessing on the training part, and gives the
/// training and validation parts candidate sets with `num_false` false labels
/// drawn over the training label span. Test sets hold only the true label.
pub fn prepare(table: &RawTable, schema: &DatasetSchema, num_false: usize, seeds: &TrialSeeds) -> CliResult<Prepared> {
    let (tr, va, te) = split(table, DEFAULT_FRACTIONS, &mut Rng::new(seeds.split, 0))?;
    let (splits, transform) = preprocess(&tr, &va, &te, schema)?;
    let corruption = CorruptionConfig::from_training_labels(&splits.train.y, num_false, seeds.corrupt)?;
    let val_corruption = CorruptionConfig {
        seed: seed_for(&[seeds.corrupt, 1]),
        ..corruption
    };
    Ok(Prepared {
        train: PartialDataset::corrupted(splits.train, &corruption, SplitTag::Train)?,
        validation: PartialDataset::corrupted(splits.validation, &val_corruption, SplitTag::Validation)?,
        test: PartialDataset::fully_labeled(splits.test, SplitTag::Test)?,
        transform,
        corruption,
    })
}
