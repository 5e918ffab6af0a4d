//! Dataset ingestion, preprocessing, splitting and candidate-set generation.
//!
//! The pipeline for a benchmark dataset is
//!
//! 1. [`load_csv`] a headered CSV against a [`DatasetSchema`],
//! 2. [`split`] it 60/20/20 into train/validation/test,
//! 3. [`preprocess`] features with statistics fitted on the training split only
//!    (labels keep their original units),
//! 4. [`corrupt`] labels into candidate sets of `1 + num_false` values, with the
//!    false labels drawn uniformly from the training-label span.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::CandidateSet;
use crate::numeric::{self, Matrix, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ColumnRecord", into = "ColumnRecord")]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnKind {
    /// Standardized to mean 0, std 1.
    Continuous,
    /// Min-max scaled. Without a declared range the training min/max is used.
    Bounded { range: Option<(f64, f64)> },
    /// One-hot encoded over the declared levels.
    Categorical { levels: Vec<String> },
}

/// JSON shape of a column: `{name, kind, lo?, hi?, levels?}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct ColumnRecord {
    name: String,
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    levels: Option<Vec<String>>,
}

impl TryFrom<ColumnRecord> for ColumnSpec {
    type Error = String;

    fn try_from(r: ColumnRecord) -> std::result::Result<Self, String> {
        let kind = match r.kind.as_str() {
            "continuous" => ColumnKind::Continuous,
            "bounded" => match (r.lo, r.hi) {
                (Some(lo), Some(hi)) if hi > lo => ColumnKind::Bounded {
                    range: Some((lo, hi)),
                },
                (None, None) => ColumnKind::Bounded { range: None },
                _ => return Err(format!("column `{}`: bounded needs hi > lo", r.name)),
            },
            "categorical" => match r.levels {
                Some(levels) if !levels.is_empty() => ColumnKind::Categorical { levels },
                _ => return Err(format!("column `{}`: categorical needs levels", r.name)),
            },
            other => return Err(format!("column `{}`: unknown kind `{other}`", r.name)),
        };
        Ok(ColumnSpec { name: r.name, kind })
    }
}

impl From<ColumnSpec> for ColumnRecord {
    fn from(c: ColumnSpec) -> Self {
        let mut rec = ColumnRecord {
            name: c.name,
            kind: String::new(),
            lo: None,
            hi: None,
            levels: None,
        };
        match c.kind {
            ColumnKind::Continuous => rec.kind = "continuous".into(),
            ColumnKind::Bounded { range } => {
                rec.kind = "bounded".into();
                rec.lo = range.map(|r| r.0);
                rec.hi = range.map(|r| r.1);
            }
            ColumnKind::Categorical { levels } => {
                rec.kind = "categorical".into();
                rec.levels = Some(levels);
            }
        }
        rec
    }
}

/// Feature columns with their preprocessing kind, plus the target column name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSchema {
    pub columns: Vec<ColumnSpec>,
    pub target: String,
}

impl DatasetSchema {
    pub fn from_json(text: &str) -> Result<Self> {
        let schema: DatasetSchema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| Error::Input {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for c in &self.columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate column `{}`", c.name)));
            }
        }
        if seen.contains(self.target.as_str()) {
            return Err(Error::InvalidConfig(format!(
                "target `{}` is also listed as a feature",
                self.target
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawValues {
    Numeric(Vec<f64>),
    /// Level indices into the schema's level list.
    Categorical(Vec<usize>),
}

impl RawValues {
    fn select(&self, idx: &[usize]) -> RawValues {
        match self {
            RawValues::Numeric(v) => RawValues::Numeric(idx.iter().map(|&i| v[i]).collect()),
            RawValues::Categorical(v) => {
                RawValues::Categorical(idx.iter().map(|&i| v[i]).collect())
            }
        }
    }
}

/// Typed, not yet preprocessed columns in schema order.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTable {
    pub columns: Vec<RawValues>,
    pub target: Vec<f64>,
}

impl RawTable {
    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn select(&self, idx: &[usize]) -> RawTable {
        RawTable {
            columns: self.columns.iter().map(|c| c.select(idx)).collect(),
            target: idx.iter().map(|&i| self.target[i]).collect(),
        }
    }
}

pub fn load_csv(path: &Path, schema: &DatasetSchema) -> Result<RawTable> {
    let file = File::open(path).map_err(|e| Error::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    read_csv(file, schema, path)
}

/// [`load_csv`] over any reader; `origin` only labels error messages.
pub fn read_csv<R: Read>(reader: R, schema: &DatasetSchema, origin: &Path) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let input_err = |message: String| Error::Input {
        path: origin.to_path_buf(),
        message,
    };
    if headers.is_empty() {
        return Err(input_err("empty file: no header row".into()));
    }
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| input_err(format!("missing column `{name}`")))
    };
    let positions = schema
        .columns
        .iter()
        .map(|c| find(&c.name))
        .collect::<Result<Vec<_>>>()?;
    let target_pos = find(&schema.target)?;

    let mut columns: Vec<RawValues> = schema
        .columns
        .iter()
        .map(|c| match c.kind {
            ColumnKind::Categorical { .. } => RawValues::Categorical(Vec::new()),
            _ => RawValues::Numeric(Vec::new()),
        })
        .collect();
    let mut target = Vec::new();

    for (i, record) in rdr.records().enumerate() {
        let record = record?;
        // 1-based data row, header excluded
        let row = i + 1;
        let load_err = |column: &str, message: String| Error::Load {
            path: origin.to_path_buf(),
            row,
            column: column.to_string(),
            message,
        };
        let cell = |pos: usize, column: &str| {
            record
                .get(pos)
                .map(str::trim)
                .ok_or_else(|| load_err(column, "missing cell".into()))
        };
        for ((spec, &pos), out) in schema.columns.iter().zip(&positions).zip(&mut columns) {
            let text = cell(pos, &spec.name)?;
            match (&spec.kind, out) {
                (ColumnKind::Categorical { levels }, RawValues::Categorical(v)) => {
                    let idx = levels
                        .iter()
                        .position(|l| l == text)
                        .ok_or_else(|| load_err(&spec.name, format!("unknown level `{text}`")))?;
                    v.push(idx);
                }
                (_, RawValues::Numeric(v)) => v.push(parse_number(text).map_err(|m| load_err(&spec.name, m))?),
                _ => unreachable!("column storage follows the schema kind"),
            }
        }
        let text = cell(target_pos, &schema.target)?;
        target.push(parse_number(text).map_err(|m| load_err(&schema.target, m))?);
    }
    Ok(RawTable { columns, target })
}

fn parse_number(text: &str) -> std::result::Result<f64, String> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        Ok(v) => Err(format!("non-finite value {v}")),
        Err(_) => Err(format!("cannot parse `{text}` as a number")),
    }
}

/// Row indices of a three-way split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

pub const DEFAULT_FRACTIONS: (f64, f64, f64) = (0.6, 0.2, 0.2);

/// Random disjoint split of `0..n`.
///
/// Validation and test sizes are `floor(fraction * n)`; the remainder goes to train.
pub fn split_indices(n: usize, fractions: (f64, f64, f64), rng: &mut Rng) -> Result<SplitIndices> {
    let (ft, fv, fs) = fractions;
    if [ft, fv, fs].iter().any(|f| !(*f >= 0.0)) || ((ft + fv + fs) - 1.0).abs() > 1e-9 {
        return Err(Error::Split(format!("fractions {fractions:?} must be non-negative and sum to 1")));
    }
    if n < 5 {
        return Err(Error::Split(format!("need at least 5 rows, got {n}")));
    }
    let n_val = (fv * n as f64 + 1e-9).floor() as usize;
    let n_test = (fs * n as f64 + 1e-9).floor() as usize;
    let perm = rng.permutation(n);
    let (val, rest) = perm.split_at(n_val);
    let (test, train) = rest.split_at(n_test);
    Ok(SplitIndices {
        train: train.to_vec(),
        validation: val.to_vec(),
        test: test.to_vec(),
    })
}

pub fn split(
    table: &RawTable,
    fractions: (f64, f64, f64),
    rng: &mut Rng,
) -> Result<(RawTable, RawTable, RawTable)> {
    let idx = split_indices(table.len(), fractions, rng)?;
    Ok((
        table.select(&idx.train),
        table.select(&idx.validation),
        table.select(&idx.test),
    ))
}

/// Features and true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledData {
    pub x: Matrix,
    pub y: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum ColumnTransform {
    Standardize { mean: f64, std: f64 },
    MinMax { lo: f64, hi: f64 },
    OneHot { levels: usize },
    Dropped { reason: String },
}

/// Per-column transform fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedTransform {
    pub columns: Vec<(String, ColumnTransform)>,
    pub warnings: Vec<String>,
}

impl FittedTransform {
    pub fn fit(train: &RawTable, schema: &DatasetSchema) -> Result<Self> {
        if train.columns.len() != schema.columns.len() {
            return Err(Error::InvalidConfig("table does not match schema".into()));
        }
        let mut columns = Vec::new();
        let mut warnings = Vec::new();
        for (spec, values) in schema.columns.iter().zip(&train.columns) {
            let t = match (&spec.kind, values) {
                (ColumnKind::Categorical { levels }, RawValues::Categorical(_)) => {
                    ColumnTransform::OneHot {
                        levels: levels.len(),
                    }
                }
                (ColumnKind::Continuous, RawValues::Numeric(v)) => match numeric::standardize(v) {
                    Ok((_, mean, std)) => ColumnTransform::Standardize { mean, std },
                    Err(_) => ColumnTransform::Dropped {
                        reason: "zero variance on the training split".into(),
                    },
                },
                (ColumnKind::Bounded { range }, RawValues::Numeric(v)) => {
                    let (lo, hi) = range.unwrap_or_else(|| {
                        v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                            (lo.min(x), hi.max(x))
                        })
                    });
                    if hi > lo {
                        ColumnTransform::MinMax { lo, hi }
                    } else {
                        ColumnTransform::Dropped {
                            reason: "empty range on the training split".into(),
                        }
                    }
                }
                _ => return Err(Error::InvalidConfig(format!("column `{}` kind mismatch", spec.name))),
            };
            if let ColumnTransform::Dropped { reason } = &t {
                warnings.push(format!("dropped column `{}`: {reason}", spec.name));
            }
            columns.push((spec.name.clone(), t));
        }
        Ok(Self { columns, warnings })
    }

    pub fn output_dim(&self) -> usize {
        self.columns
            .iter()
            .map(|(_, t)| match t {
                ColumnTransform::OneHot { levels } => *levels,
                ColumnTransform::Dropped { .. } => 0,
                _ => 1,
            })
            .sum()
    }

    pub fn apply(&self, table: &RawTable) -> Result<LabeledData> {
        if table.columns.len() != self.columns.len() {
            return Err(Error::InvalidConfig("table does not match fitted transform".into()));
        }
        let n = table.len();
        let d = self.output_dim();
        let mut x = Matrix::zeros(n, d);
        let mut offset = 0;
        for ((name, t), values) in self.columns.iter().zip(&table.columns) {
            match (t, values) {
                (ColumnTransform::Standardize { mean, std }, RawValues::Numeric(v)) => {
                    for (r, z) in numeric::apply_standardize(v, *mean, *std).into_iter().enumerate() {
                        x.set(r, offset, z);
                    }
                    offset += 1;
                }
                (ColumnTransform::MinMax { lo, hi }, RawValues::Numeric(v)) => {
                    for (r, z) in numeric::minmax(v, *lo, *hi)?.into_iter().enumerate() {
                        x.set(r, offset, z);
                    }
                    offset += 1;
                }
                (ColumnTransform::OneHot { levels }, RawValues::Categorical(v)) => {
                    for (r, &level) in v.iter().enumerate() {
                        x.set(r, offset + level, 1.0);
                    }
                    offset += levels;
                }
                (ColumnTransform::Dropped { .. }, _) => {}
                _ => return Err(Error::InvalidConfig(format!("column `{name}` kind mismatch"))),
            }
        }
        Ok(LabeledData {
            x,
            y: table.target.clone(),
        })
    }
}

/// Preprocessed train/validation/test features with untouched labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessedSplits {
    pub train: LabeledData,
    pub validation: LabeledData,
    pub test: LabeledData,
}

pub fn preprocess(
    train: &RawTable,
    validation: &RawTable,
    test: &RawTable,
    schema: &DatasetSchema,
) -> Result<(PreprocessedSplits, FittedTransform)> {
    let transform = FittedTransform::fit(train, schema)?;
    let splits = PreprocessedSplits {
        train: transform.apply(train)?,
        validation: transform.apply(validation)?,
        test: transform.apply(test)?,
    };
    Ok((splits, transform))
}

/// How candidate sets are generated from true labels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorruptionConfig {
    /// Number of false labels added to each set.
    pub num_false: usize,
    /// `(min, max)` of the training labels.
    pub span: (f64, f64),
    pub seed: u64,
}

impl CorruptionConfig {
    pub fn from_training_labels(train_labels: &[f64], num_false: usize, seed: u64) -> Result<Self> {
        let span = train_labels
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| (lo.min(y), hi.max(y)));
        if !(span.1 > span.0) {
            return Err(Error::Corruption(format!("degenerate label span {span:?}")));
        }
        Ok(Self {
            num_false,
            span,
            seed,
        })
    }
}

/// Builds one candidate set per label: the label itself plus `num_false`
/// draws from `U(span)`, with the true label at a uniformly random position.
///
/// Example `i` draws from its own stream `(seed, i)`, so the output does not
/// depend on how the work is chunked.
pub fn corrupt(labels: &[f64], config: &CorruptionConfig) -> Result<Vec<CandidateSet>> {
    let (lo, hi) = config.span;
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Corruption(format!("degenerate label span ({lo}, {hi})")));
    }
    labels
        .iter()
        .enumerate()
        .map(|(i, &y)| {
            if config.num_false == 0 {
                return CandidateSet::single(y);
            }
            let mut rng = Rng::derive(config.seed, i as u64);
            let mut set: Vec<f64> = (0..config.num_false)
                .map(|_| rng.uniform_between(lo, hi))
                .collect();
            let pos = rng.below(config.num_false + 1);
            set.insert(pos, y);
            CandidateSet::new(set)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Validation,
    Test,
}

impl SplitTag {
    pub fn file_stem(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Validation => "validation",
            SplitTag::Test => "test",
        }
    }
}

/// Features with candidate sets. `y_true` is kept for evaluation and for the
/// supervised baseline only.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialDataset {
    x: Matrix,
    candidates: Vec<CandidateSet>,
    y_true: Vec<f64>,
    split: SplitTag,
}

impl PartialDataset {
    pub fn new(
        x: Matrix,
        candidates: Vec<CandidateSet>,
        y_true: Vec<f64>,
        split: SplitTag,
    ) -> Result<Self> {
        if x.rows() != candidates.len() || x.rows() != y_true.len() {
            return Err(Error::Shape {
                op: "PartialDataset::new",
                left: x.shape(),
                right: (candidates.len(), y_true.len()),
            });
        }
        if let Some(first) = candidates.first() {
            if let Some(i) = candidates.iter().position(|s| s.len() != first.len()) {
                return Err(Error::Domain(format!(
                    "candidate set {i} has size {}, expected {}",
                    candidates[i].len(),
                    first.len()
                )));
            }
        }
        if let Some(i) = (0..y_true.len()).find(|&i| !candidates[i].contains(y_true[i])) {
            return Err(Error::Domain(format!("true label of example {i} is not a candidate")));
        }
        Ok(Self {
            x,
            candidates,
            y_true,
            split,
        })
    }

    /// Every candidate set is just the true label.
    pub fn fully_labeled(data: LabeledData, split: SplitTag) -> Result<Self> {
        let candidates = data
            .y
            .iter()
            .map(|&y| CandidateSet::single(y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(data.x, candidates, data.y, split)
    }

    pub fn corrupted(data: LabeledData, config: &CorruptionConfig, split: SplitTag) -> Result<Self> {
        let candidates = corrupt(&data.y, config)?;
        Self::new(data.x, candidates, data.y, split)
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn candidates(&self) -> &[CandidateSet] {
        &self.candidates
    }

    pub fn y_true(&self) -> &[f64] {
        &self.y_true
    }

    pub fn split(&self) -> SplitTag {
        self.split
    }

    pub fn len(&self) -> usize {
        self.y_true.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y_true.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.cols()
    }

    /// Number of false labels per set (0 for an empty dataset).
    pub fn num_false(&self) -> usize {
        self.candidates.first().map_or(0, |s| s.len() - 1)
    }

    pub fn subset(&self, idx: &[usize]) -> PartialDataset {
        PartialDataset {
            x: self.x.select_rows(idx),
            candidates: idx.iter().map(|&i| self.candidates[i].clone()).collect(),
            y_true: idx.iter().map(|&i| self.y_true[i]).collect(),
            split: self.split,
        }
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.len() {
            let rec = ExampleRecord {
                features: self.x.row(i).to_vec(),
                candidates: self.candidates[i].labels().to_vec(),
                y_true: self.y_true[i],
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R, split: SplitTag, origin: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        let mut candidates = Vec::new();
        let mut y_true = Vec::new();
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ExampleRecord = serde_json::from_str(&line).map_err(|e| Error::Load {
                path: origin.to_path_buf(),
                row: i + 1,
                column: String::new(),
                message: e.to_string(),
            })?;
            rows.push(rec.features);
            candidates.push(CandidateSet::new(rec.candidates)?);
            y_true.push(rec.y_true);
        }
        let x = Matrix::from_rows(&rows)?;
        Self::new(x, candidates, y_true, split)
    }

    pub fn save_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = std::io::BufWriter::new(File::create(path)?);
        self.write_jsonl(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load_jsonl(path: &Path, split: SplitTag) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::Input {
            path: PathBuf::from(path),
            message: e.to_string(),
        })?;
        Self::read_jsonl(BufReader::new(file), split, path)
    }
}

/// One JSON-lines record. `y_true` is for evaluation only, never for training a
/// partial-label method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRecord {
    pub features: Vec<f64>,
    pub candidates: Vec<f64>,
    pub y_true: f64,
}

/// Noise-free linear data: `x ~ U(x_range)^d`, `y = w . x + b`.
pub fn synth_linear(n: usize, w: &[f64], b: f64, x_range: (f64, f64), rng: &mut Rng) -> Result<LabeledData> {
    if w.is_empty() {
        return Err(Error::InvalidDimension("weight vector must be non-empty".into()));
    }
    if !(x_range.1 > x_range.0) {
        return Err(Error::DegenerateRange {
            lo: x_range.0,
            hi: x_range.1,
        });
    }
    let d = w.len();
    let mut x = Matrix::zeros(n, d);
    let mut y = Vec::with_capacity(n);
    for r in 0..n {
        let row = x.row_mut(r);
        for v in row.iter_mut() {
            *v = rng.uniform_between(x_range.0, x_range.1);
        }
        y.push(linear_label(row, w, b));
    }
    Ok(LabeledData { x, y })
}

pub fn linear_label(x: &[f64], w: &[f64], b: f64) -> f64 {
    x.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b
}
