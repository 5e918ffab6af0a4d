//! Pointwise regression losses and the candidate-set aggregations built on them.
//!
//! Every function returns `(value, d value / d prediction)`, which is all the
//! trainer needs to backpropagate through a model.
//!
//! Aggregations over a candidate set `S`:
//!
//! | [`Aggregation`] | value |
//! |---|---|
//! | `Supervised` | `l(p, y_true)` |
//! | `AvgLoss` | `mean_{y in S} l(p, y)` |
//! | `AvgValue` | `l(p, mean(S))` |
//! | `MinLoss` | `min_{y in S} l(p, y)` |
//! | `Weighted` | `sum_i w_i l(p, y_i)` with `w = softmax(beta2 * max(l_i, eps)^-beta1)` |
//!
//! For `Weighted`, the weights are recomputed from the current losses on
//! every call and treated as constants when differentiating.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Floor applied to a candidate loss before raising it to `-beta1`.
pub const WEIGHT_LOSS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PointwiseLoss {
    Mse,
    Mae,
    Huber { delta: f64 },
}

impl PointwiseLoss {
    pub fn huber(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!("huber delta must be > 0, got {delta}")));
        }
        Ok(PointwiseLoss::Huber { delta })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PointwiseLoss::Huber { delta } => Self::huber(delta).map(|_| ()),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PointwiseLoss::Mse => "mse",
            PointwiseLoss::Mae => "mae",
            PointwiseLoss::Huber { .. } => "huber",
        }
    }

    /// `(loss, dloss/dpred)` for one prediction and one label.
    pub fn eval(&self, pred: f64, y: f64) -> Result<(f64, f64)> {
        if !pred.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite(format!("pointwise loss input ({pred}, {y})")));
        }
        Ok(self.eval_unchecked(pred, y))
    }

    #[inline]
    fn eval_unchecked(&self, pred: f64, y: f64) -> (f64, f64) {
        let r = pred - y;
        match *self {
            PointwiseLoss::Mse => (r * r, 2.0 * r),
            PointwiseLoss::Mae => (r.abs(), sign(r)),
            PointwiseLoss::Huber { delta } => {
                if r.abs() <= delta {
                    (0.5 * r * r, r)
                } else {
                    (delta * (r.abs() - 0.5 * delta), delta * sign(r))
                }
            }
        }
    }
}

/// Sign with `sign(0) = 0`.
#[inline]
fn sign(r: f64) -> f64 {
    if r > 0.0 {
        1.0
    } else if r < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `pointwise(loss, pred, y)`.
pub fn pointwise(loss: PointwiseLoss, pred: f64, y: f64) -> Result<(f64, f64)> {
    loss.eval(pred, y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aggregation {
    Supervised,
    AvgLoss,
    AvgValue,
    MinLoss,
    Weighted { beta1: f64, beta2: f64 },
}

impl Aggregation {
    pub fn weighted(beta1: f64, beta2: f64) -> Result<Self> {
        check_betas(beta1, beta2)?;
        Ok(Aggregation::Weighted { beta1, beta2 })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Aggregation::Weighted { beta1, beta2 } => check_betas(beta1, beta2),
            _ => Ok(()),
        }
    }

    pub fn needs_true_label(&self) -> bool {
        matches!(self, Aggregation::Supervised)
    }
}

fn check_betas(beta1: f64, beta2: f64) -> Result<()> {
    if !(beta1 > 0.0 && beta1.is_finite()) {
        return Err(Error::InvalidConfig(format!("beta1 must be > 0, got {beta1}")));
    }
    if !(beta2 >= 0.0 && beta2.is_finite()) {
        return Err(Error::InvalidConfig(format!("beta2 must be >= 0, got {beta2}")));
    }
    Ok(())
}

/// A non-empty set of finite candidate labels. Order is significant only for
/// tie-breaking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct CandidateSet(Vec<f64>);

impl CandidateSet {
    pub fn new(labels: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Domain("candidate set must be non-empty".into()));
        }
        if let Some(bad) = labels.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("candidate label {bad}")));
        }
        Ok(Self(labels))
    }

    pub fn single(label: f64) -> Result<Self> {
        Self::new(vec![label])
    }

    pub fn labels(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Exact membership: the true label is inserted verbatim, never recomputed.
    pub fn contains(&self, y: f64) -> bool {
        self.0.iter().any(|&c| c == y)
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

impl TryFrom<Vec<f64>> for CandidateSet {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<CandidateSet> for Vec<f64> {
    fn from(s: CandidateSet) -> Self {
        s.0
    }
}

/// Candidate weights from their current losses.
///
/// Each candidate scores `beta2 * max(l_i, 1e-8)^(-beta1)`; the weights are
/// the softmax of the scores, computed with the maximum score subtracted.
/// They are non-negative and sum to one, with smaller losses receiving larger
/// weight. `beta2 = 0` gives exactly uniform weights.
pub fn weights(loss_values: &[f64], beta1: f64, beta2: f64) -> Result<Vec<f64>> {
    check_betas(beta1, beta2)?;
    if loss_values.is_empty() {
        return Err(Error::Domain("weights of an empty candidate set".into()));
    }
    if let Some(bad) = loss_values.iter().find(|&&l| !(l >= 0.0)) {
        return Err(Error::Domain(format!("candidate loss must be >= 0, got {bad}")));
    }
    let mut out = vec![0.0; loss_values.len()];
    softmax_weights(loss_values, beta1, beta2, &mut out);
    Ok(out)
}

/// Unchecked core of [`weights`]; writes into `out`.
fn softmax_weights(loss_values: &[f64], beta1: f64, beta2: f64, out: &mut [f64]) {
    let n = loss_values.len();
    if beta2 == 0.0 {
        out.fill(1.0 / n as f64);
        return;
    }
    for (s, &l) in out.iter_mut().zip(loss_values) {
        *s = beta2 * l.max(WEIGHT_LOSS_FLOOR).powf(-beta1);
    }
    let max = out.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::INFINITY {
        // scores overflowed: share the mass among the overflowing candidates
        let top = out.iter().filter(|&&s| s == f64::INFINITY).count() as f64;
        for s in out.iter_mut() {
            *s = if *s == f64::INFINITY { 1.0 / top } else { 0.0 };
        }
        return;
    }
    let mut total = 0.0;
    for s in out.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    for s in out.iter_mut() {
        *s /= total;
    }
}

/// A full training objective: how candidates are combined, and the loss used per candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlrLoss {
    pub aggregation: Aggregation,
    pub pointwise: PointwiseLoss,
}

impl PlrLoss {
    pub fn new(aggregation: Aggregation, pointwise: PointwiseLoss) -> Result<Self> {
        aggregation.validate()?;
        pointwise.validate()?;
        Ok(Self {
            aggregation,
            pointwise,
        })
    }

    pub fn eval(&self, pred: f64, candidates: &CandidateSet, y_true: Option<f64>) -> Result<(f64, f64)> {
        plr_loss(self.aggregation, self.pointwise, pred, candidates, y_true)
    }

    /// Same as [`PlrLoss::eval`] but reuses `scratch` for per-candidate buffers.
    pub(crate) fn eval_with(
        &self,
        pred: f64,
        candidates: &CandidateSet,
        y_true: Option<f64>,
        scratch: &mut Scratch,
    ) -> Result<(f64, f64)> {
        plr_loss_inner(self.aggregation, self.pointwise, pred, candidates, y_true, scratch)
    }
}

#[derive(Debug, Default)]
pub(crate) struct Scratch {
    values: Vec<f64>,
    derivs: Vec<f64>,
    weights: Vec<f64>,
}

/// Loss of one prediction against a candidate set, with its derivative.
pub fn plr_loss(
    agg: Aggregation,
    loss: PointwiseLoss,
    pred: f64,
    candidates: &CandidateSet,
    y_true: Option<f64>,
) -> Result<(f64, f64)> {
    agg.validate()?;
    loss.validate()?;
    plr_loss_inner(agg, loss, pred, candidates, y_true, &mut Scratch::default())
}

fn plr_loss_inner(
    agg: Aggregation,
    loss: PointwiseLoss,
    pred: f64,
    candidates: &CandidateSet,
    y_true: Option<f64>,
    scratch: &mut Scratch,
) -> Result<(f64, f64)> {
    if !pred.is_finite() {
        return Err(Error::NonFinite(format!("prediction {pred}")));
    }
    match agg {
        Aggregation::Supervised => {
            let y = y_true.ok_or(Error::MissingLabel)?;
            loss.eval(pred, y)
        }
        Aggregation::AvgValue => Ok(loss.eval_unchecked(pred, candidates.mean())),
        Aggregation::MinLoss => {
            let mut best = (f64::INFINITY, 0.0);
            // strict `<` keeps the lowest index on ties
            for &y in candidates.labels() {
                let (v, d) = loss.eval_unchecked(pred, y);
                if v < best.0 {
                    best = (v, d);
                }
            }
            Ok(best)
        }
        Aggregation::AvgLoss | Aggregation::Weighted { .. } => {
            let Scratch {
                values,
                derivs,
                weights,
            } = scratch;
            values.clear();
            derivs.clear();
            for &y in candidates.labels() {
                let (v, d) = loss.eval_unchecked(pred, y);
                values.push(v);
                derivs.push(d);
            }
            weights.resize(values.len(), 0.0);
            match agg {
                Aggregation::Weighted { beta1, beta2 } => {
                    softmax_weights(values, beta1, beta2, weights)
                }
                _ => weights.fill(1.0 / values.len() as f64),
            }
            // AvgLoss shares this path so that beta2 = 0 reproduces it bit for bit
            let mut value = 0.0;
            let mut deriv = 0.0;
            for ((w, v), d) in weights.iter().zip(values.iter()).zip(derivs.iter()) {
                value += w * v;
                deriv += w * d;
            }
            Ok((value, deriv))
        }
    }
}
