//! Minibatch Adam training for any aggregation/loss/model combination, and
//! validation-based selection over a hyperparameter grid.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::PartialDataset;
use crate::error::{Error, Result};
use crate::losses::{Aggregation, PlrLoss, PointwiseLoss, Scratch};
use crate::model::{AdamConfig, AdamState, ModelKind, RegressionModel};
use crate::numeric::{seed_for, Rng};

/// A run is declared diverged once a batch loss exceeds this multiple of the
/// loss at initialization (or 1, whichever is larger).
pub const DIVERGENCE_FACTOR: f64 = 1e8;

const STREAM_INIT: u64 = 0;
const STREAM_SHUFFLE: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ValidationMetric {
    /// Mean over examples of the smallest squared error to any candidate.
    /// Uses partial labels only.
    #[default]
    PartialMin,
    /// Mean squared error against the true labels.
    TrueMse,
}

impl FromStr for ValidationMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "partial_min" | "partial-min" => Ok(ValidationMetric::PartialMin),
            "true_mse" | "true-mse" => Ok(ValidationMetric::TrueMse),
            other => Err(Error::InvalidConfig(format!("unknown validation metric `{other}`"))),
        }
    }
}

/// What predictions are scored against in [`evaluate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalTarget {
    TrueLabels,
    MinCandidate,
}

impl From<ValidationMetric> for EvalTarget {
    fn from(m: ValidationMetric) -> Self {
        match m {
            ValidationMetric::PartialMin => EvalTarget::MinCandidate,
            ValidationMetric::TrueMse => EvalTarget::TrueLabels,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub model_kind: ModelKind,
    pub loss: PlrLoss,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub validation_metric: ValidationMetric,
}

impl TrainConfig {
    pub fn new(model_kind: ModelKind, loss: PlrLoss, learning_rate: f64, seed: u64) -> Self {
        Self {
            model_kind,
            loss,
            learning_rate,
            batch_size: 256,
            epochs: 1000,
            seed,
            validation_metric: ValidationMetric::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return Err(Error::InvalidConfig("batch size and epochs must be at least 1".into()));
        }
        self.loss.aggregation.validate()?;
        self.loss.pointwise.validate()
    }

    /// Short `key=value` list of the tunable hyperparameters.
    pub fn describe(&self) -> String {
        let mut s = format!("lr={}", self.learning_rate);
        if let Aggregation::Weighted { beta1, beta2 } = self.loss.aggregation {
            s.push_str(&format!(" beta1={beta1} beta2={beta2}"));
        }
        if let PointwiseLoss::Huber { delta } = self.loss.pointwise {
            s.push_str(&format!(" delta={delta}"));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct FitOutcome {
    pub model: RegressionModel,
    /// Mean training loss per epoch, accumulated over the epoch's batches.
    pub train_loss: Vec<f64>,
    /// Validation metric after each epoch.
    pub validation_metric: Vec<f64>,
    pub seconds: f64,
}

impl FitOutcome {
    pub fn final_validation(&self) -> f64 {
        *self.validation_metric.last().expect("epochs >= 1")
    }
}

pub fn fit(config: &TrainConfig, train: &PartialDataset, validation: &PartialDataset) -> Result<FitOutcome> {
    config.validate()?;
    if train.is_empty() || validation.is_empty() {
        return Err(Error::InvalidConfig("training and validation sets must be non-empty".into()));
    }
    if train.dim() != validation.dim() {
        return Err(Error::Shape {
            op: "fit",
            left: train.x().shape(),
            right: validation.x().shape(),
        });
    }
    let start = Instant::now();
    let mut model = RegressionModel::init(config.model_kind, train.dim(), &mut Rng::derive(config.seed, STREAM_INIT))?;
    let mut adam = AdamState::new(&model, AdamConfig::with_learning_rate(config.learning_rate));
    let mut shuffle_rng = Rng::derive(config.seed, STREAM_SHUFFLE);
    let target = EvalTarget::from(config.validation_metric);
    let loss = config.loss;
    let supervised = loss.aggregation.needs_true_label();

    let n = train.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut scratch = Scratch::default();
    let mut ceiling: Option<f64> = None;
    let mut train_trace = Vec::with_capacity(config.epochs);
    let mut val_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        shuffle_rng.shuffle(&mut order);
        let mut epoch_sum = 0.0;
        for (batch, chunk) in order.chunks(config.batch_size).enumerate() {
            let diverged = |loss: f64| Error::Divergence { epoch, batch, loss };
            let xb = train.x().select_rows(chunk);
            let (preds, cache) = model.forward_with_cache(&xb)?;
            let m = chunk.len() as f64;
            let mut upstream = Vec::with_capacity(chunk.len());
            let mut batch_sum = 0.0;
            for (&pred, &i) in preds.iter().zip(chunk) {
                if !pred.is_finite() {
                    return Err(diverged(pred));
                }
                let y = supervised.then(|| train.y_true()[i]);
                let (v, d) = loss.eval_with(pred, &train.candidates()[i], y, &mut scratch)?;
                batch_sum += v;
                upstream.push(d / m);
            }
            let batch_mean = batch_sum / m;
            let limit = *ceiling.get_or_insert(DIVERGENCE_FACTOR * batch_mean.max(1.0));
            if !batch_mean.is_finite() || batch_mean > limit {
                return Err(diverged(batch_mean));
            }
            let grads = model.backward_cached(&cache, &upstream)?;
            adam.step(&mut model, &grads).map_err(|e| match e {
                Error::NonFinite(_) => diverged(batch_mean),
                other => other,
            })?;
            epoch_sum += batch_sum;
        }
        train_trace.push(epoch_sum / n as f64);
        let v = evaluate(&model, validation, target)?;
        if !v.is_finite() {
            return Err(Error::Divergence {
                epoch,
                batch: n.div_ceil(config.batch_size),
                loss: v,
            });
        }
        val_trace.push(v);
    }
    Ok(FitOutcome {
        model,
        train_loss: train_trace,
        validation_metric: val_trace,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Mean squared error of `model` on `dataset`, against the true labels or
/// against the closest candidate of each example.
pub fn evaluate(model: &RegressionModel, dataset: &PartialDataset, against: EvalTarget) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("cannot evaluate on an empty dataset".into()));
    }
    let preds = model.forward_batch(dataset.x())?;
    let total: f64 = match against {
        EvalTarget::TrueLabels => preds
            .iter()
            .zip(dataset.y_true())
            .map(|(p, y)| (p - y) * (p - y))
            .sum(),
        EvalTarget::MinCandidate => preds
            .iter()
            .zip(dataset.candidates())
            .map(|(p, s)| {
                s.labels()
                    .iter()
                    .map(|y| (p - y) * (p - y))
                    .fold(f64::INFINITY, f64::min)
            })
            .sum(),
    };
    Ok(total / dataset.len() as f64)
}

#[derive(Debug, Clone)]
pub struct Selection {
    /// Position of the winner in the grid.
    pub index: usize,
    pub config: TrainConfig,
    pub outcome: FitOutcome,
    /// `(grid index, error)` for every configuration that failed.
    pub failures: Vec<(usize, String)>,
}

/// Fits every configuration and keeps the one with the lowest final-epoch
/// validation metric; ties go to the earlier configuration.
pub fn select(grid: &[TrainConfig], train: &PartialDataset, validation: &PartialDataset) -> Result<Selection> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty configuration grid".into()));
    }
    let mut best: Option<(usize, FitOutcome)> = None;
    let mut failures = Vec::new();
    for (i, config) in grid.iter().enumerate() {
        match fit(config, train, validation) {
            Ok(outcome) => {
                let better = best
                    .as_ref()
                    .is_none_or(|(_, b)| outcome.final_validation() < b.final_validation());
                if better {
                    best = Some((i, outcome));
                }
            }
            Err(e) => failures.push((i, e.to_string())),
        }
    }
    match best {
        Some((index, outcome)) => Ok(Selection {
            index,
            config: grid[index],
            outcome,
            failures,
        }),
        None => Err(Error::Selection {
            failures: failures
                .into_iter()
                .map(|(i, e)| format!("config {i} ({}): {e}", grid[i].describe()))
                .collect(),
        }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Supervised,
    Avgl,
    Avgv,
    Ident,
    Pident,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Mse,
    Mae,
    Huber,
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(LossKind::Mse),
            "mae" => Ok(LossKind::Mae),
            "huber" => Ok(LossKind::Huber),
            other => Err(Error::InvalidConfig(format!("unknown loss `{other}`"))),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "supervised" => Ok(Scheme::Supervised),
            "avgl" => Ok(Scheme::Avgl),
            "avgv" => Ok(Scheme::Avgv),
            "ident" => Ok(Scheme::Ident),
            "pident" => Ok(Scheme::Pident),
            other => Err(Error::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

/// A named training method: a candidate aggregation scheme with a base loss.
///
/// Display names follow the usual table headers: `Supervised`, `AVGL-MSE`,
/// `AVGV-Huber`, `IDent`, `PIDent`. Non-MSE variants of the single-loss
/// schemes get a suffix (`IDent-MAE`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Method {
    pub scheme: Scheme,
    pub loss: LossKind,
}

impl Method {
    pub const fn new(scheme: Scheme, loss: LossKind) -> Self {
        Self { scheme, loss }
    }

    /// The methods of the standard comparison, in table-column order.
    pub fn standard_suite() -> Vec<Method> {
        use LossKind::*;
        use Scheme::*;
        vec![
            Method::new(Supervised, Mse),
            Method::new(Avgl, Mse),
            Method::new(Avgl, Mae),
            Method::new(Avgl, Huber),
            Method::new(Avgv, Mse),
            Method::new(Avgv, Mae),
            Method::new(Avgv, Huber),
            Method::new(Ident, Mse),
            Method::new(Pident, Mse),
        ]
    }

    /// Sort key placing known methods in table-column order.
    pub fn column_rank(&self) -> usize {
        Self::standard_suite()
            .iter()
            .position(|m| m == self)
            .unwrap_or(usize::MAX)
    }

    fn aggregation(&self, beta1: f64, beta2: f64) -> Result<Aggregation> {
        Ok(match self.scheme {
            Scheme::Supervised => Aggregation::Supervised,
            Scheme::Avgl => Aggregation::AvgLoss,
            Scheme::Avgv => Aggregation::AvgValue,
            Scheme::Ident => Aggregation::MinLoss,
            Scheme::Pident => Aggregation::weighted(beta1, beta2)?,
        })
    }

    fn pointwise(&self, delta: f64) -> Result<PointwiseLoss> {
        Ok(match self.loss {
            LossKind::Mse => PointwiseLoss::Mse,
            LossKind::Mae => PointwiseLoss::Mae,
            LossKind::Huber => PointwiseLoss::huber(delta)?,
        })
    }

    /// The training loss for one hyperparameter setting. Parameters the
    /// method does not use are ignored.
    pub fn plr_loss(&self, beta1: f64, beta2: f64, huber_delta: f64) -> Result<PlrLoss> {
        PlrLoss::new(self.aggregation(beta1, beta2)?, self.pointwise(huber_delta)?)
    }

    /// Expands the method over the grid, learning rate outermost. Each entry
    /// gets seed `seed_for([base_seed, grid index])`.
    pub fn grid(&self, spec: &GridSpec, model_kind: ModelKind, base_seed: u64) -> Result<Vec<TrainConfig>> {
        let beta2s: &[f64] = if self.scheme == Scheme::Pident { &spec.beta2 } else { &[0.0] };
        let deltas: &[f64] = if self.loss == LossKind::Huber { &spec.huber_delta } else { &[1.0] };
        let mut out = Vec::new();
        for &lr in &spec.learning_rates {
            for &beta2 in beta2s {
                for &delta in deltas {
                    let loss = self.plr_loss(spec.beta1, beta2, delta)?;
                    let mut cfg = TrainConfig::new(model_kind, loss, lr, seed_for(&[base_seed, out.len() as u64]));
                    cfg.batch_size = spec.batch_size;
                    cfg.epochs = spec.epochs;
                    cfg.validation_metric = spec.validation_metric;
                    out.push(cfg);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::InvalidConfig(format!("empty grid for {self}")));
        }
        Ok(out)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let loss = match self.loss {
            LossKind::Mse => "MSE",
            LossKind::Mae => "MAE",
            LossKind::Huber => "Huber",
        };
        match (self.scheme, self.loss) {
            (Scheme::Supervised, LossKind::Mse) => f.write_str("Supervised"),
            (Scheme::Ident, LossKind::Mse) => f.write_str("IDent"),
            (Scheme::Pident, LossKind::Mse) => f.write_str("PIDent"),
            (Scheme::Supervised, _) => write!(f, "Supervised-{loss}"),
            (Scheme::Ident, _) => write!(f, "IDent-{loss}"),
            (Scheme::Pident, _) => write!(f, "PIDent-{loss}"),
            (Scheme::Avgl, _) => write!(f, "AVGL-{loss}"),
            (Scheme::Avgv, _) => write!(f, "AVGV-{loss}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts display names case-insensitively (`avgl-mae`, `IDent`, `pident-huber`).
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        let (scheme, loss) = match lower.split_once('-') {
            Some((scheme, loss)) => (scheme.parse()?, loss.parse()?),
            None => (lower.parse::<Scheme>()?, LossKind::Mse),
        };
        if matches!(scheme, Scheme::Avgl | Scheme::Avgv) && !lower.contains('-') {
            return Err(Error::InvalidConfig(format!("method `{s}` needs a loss suffix, e.g. `{lower}-mse`")));
        }
        Ok(Method::new(scheme, loss))
    }
}

/// Hyperparameter grid shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub learning_rates: Vec<f64>,
    pub beta1: f64,
    pub beta2: Vec<f64>,
    pub huber_delta: Vec<f64>,
    pub batch_size: usize,
    pub epochs: usize,
    pub validation_metric: ValidationMetric,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            learning_rates: vec![0.01, 0.001],
            beta1: 0.5,
            beta2: vec![10.0, 100.0, 500.0, 1000.0, 10000.0],
            huber_delta: vec![1.0, 5.0],
            batch_size: 256,
            epochs: 1000,
            validation_metric: ValidationMetric::PartialMin,
        }
    }
}
