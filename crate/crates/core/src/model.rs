//! Regression models `f: R^d -> R` with hand-written reverse-mode gradients,
//! and the Adam optimizer.
//!
//! Two architectures are supported: an affine map (`Linear`, `d -> 1`) and a
//! ReLU multilayer perceptron with widths `d -> 20 -> 30 -> 10 -> 1`
//! (`Mlp`). Weights are stored `fan_in x fan_out` so a batch forward pass is
//! `X * W + b`, one row per example.
//!
//! The ReLU derivative at exactly zero is taken to be 0.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{matmul_into, Matrix, Rng};

pub const MLP_HIDDEN: [usize; 3] = [20, 30, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Mlp,
}

impl ModelKind {
    /// Layer widths from input to output.
    pub fn widths(self, input_dim: usize) -> Vec<usize> {
        match self {
            ModelKind::Linear => vec![input_dim, 1],
            ModelKind::Mlp => {
                let mut w = vec![input_dim];
                w.extend_from_slice(&MLP_HIDDEN);
                w.push(1);
                w
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::InvalidConfig(format!("unknown model kind `{other}`"))),
        }
    }
}

/// One affine layer. `weight` is `fan_in x fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn new(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if weight.cols() != bias.len() {
            return Err(Error::Shape {
                op: "Dense::new",
                left: weight.shape(),
                right: (bias.len(), 1),
            });
        }
        Ok(Self { weight, bias })
    }

    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            weight: Matrix::zeros(fan_in, fan_out),
            bias: vec![0.0; fan_out],
        }
    }

    pub fn fan_in(&self) -> usize {
        self.weight.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.weight.cols()
    }

    fn num_params(&self) -> usize {
        self.weight.as_slice().len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    kind: ModelKind,
    layers: Vec<Dense>,
}

/// Parameter-shaped gradient of a scalar objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<Dense>,
}

/// Per-layer inputs recorded by a forward pass, reused by the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    activations: Vec<Matrix>,
}

impl RegressionModel {
    /// Glorot-uniform weights, zero biases.
    pub fn init(kind: ModelKind, input_dim: usize, rng: &mut Rng) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::InvalidDimension("input_dim must be at least 1".into()));
        }
        let widths = kind.widths(input_dim);
        let layers = widths
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let mut layer = Dense::zeros(fan_in, fan_out);
                for v in layer.weight.as_mut_slice() {
                    *v = -limit + 2.0 * limit * rng.uniform();
                }
                layer
            })
            .collect();
        Ok(Self { kind, layers })
    }

    /// Assembles a model from explicit layers, checking the architecture.
    pub fn from_layers(kind: ModelKind, layers: Vec<Dense>) -> Result<Self> {
        let input_dim = layers.first().map_or(0, Dense::fan_in);
        if input_dim == 0 {
            return Err(Error::InvalidDimension("model needs a non-empty input layer".into()));
        }
        let expected = kind.widths(input_dim);
        let actual: Vec<usize> = std::iter::once(input_dim)
            .chain(layers.iter().map(Dense::fan_out))
            .collect();
        let chained = layers.windows(2).all(|w| w[0].fan_out() == w[1].fan_in());
        if actual != expected || !chained {
            return Err(Error::InvalidDimension(format!(
                "{} model expects widths {expected:?}, got {actual:?}",
                kind.name()
            )));
        }
        Ok(Self { kind, layers })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    /// All parameters flattened, layer by layer, weights (row-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    /// Copy of this model with parameters replaced from [`RegressionModel::params`] order.
    pub fn with_params(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.num_params() {
            return Err(Error::Shape {
                op: "with_params",
                left: (self.num_params(), 1),
                right: (params.len(), 1),
            });
        }
        let mut out = self.clone();
        let mut it = params.iter().copied();
        for layer in &mut out.layers {
            for v in layer.weight.as_mut_slice().iter_mut().chain(layer.bias.iter_mut()) {
                *v = it.next().expect("length checked");
            }
        }
        Ok(out)
    }

    pub fn forward_batch(&self, x: &Matrix) -> Result<Vec<f64>> {
        Ok(self.forward_with_cache(x)?.0)
    }

    pub fn forward_with_cache(&self, x: &Matrix) -> Result<(Vec<f64>, ForwardCache)> {
        if x.cols() != self.input_dim() {
            return Err(Error::Shape {
                op: "forward_batch",
                left: x.shape(),
                right: (self.input_dim(), 1),
            });
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut current = x.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Matrix::zeros(current.rows(), layer.fan_out());
            matmul_into(&current, &layer.weight, &mut z);
            for r in 0..z.rows() {
                for (v, b) in z.row_mut(r).iter_mut().zip(&layer.bias) {
                    *v += b;
                    if l < last && *v <= 0.0 {
                        *v = 0.0;
                    }
                }
            }
            activations.push(std::mem::replace(&mut current, z));
        }
        Ok((current.into_vec(), ForwardCache { activations }))
    }

    /// Gradient of `sum_i upstream[i] * f(x_i)` with respect to every parameter.
    pub fn backward_batch(&self, x: &Matrix, upstream: &[f64]) -> Result<Gradients> {
        let (_, cache) = self.forward_with_cache(x)?;
        self.backward_cached(&cache, upstream)
    }

    pub fn backward_cached(&self, cache: &ForwardCache, upstream: &[f64]) -> Result<Gradients> {
        let n = cache.activations[0].rows();
        if upstream.len() != n {
            return Err(Error::Shape {
                op: "backward_batch",
                left: (n, self.input_dim()),
                right: (upstream.len(), 1),
            });
        }
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        let mut delta = Matrix::column_vector(upstream);
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[l];
            let (fan_in, fan_out) = (layer.fan_in(), layer.fan_out());
            let mut g = Dense::zeros(fan_in, fan_out);
            for r in 0..n {
                let d_row = delta.row(r);
                for (gb, &d) in g.bias.iter_mut().zip(d_row) {
                    *gb += d;
                }
                for (k, &a) in input.row(r).iter().enumerate() {
                    if a == 0.0 {
                        continue;
                    }
                    for (gw, &d) in g.weight.row_mut(k).iter_mut().zip(d_row) {
                        *gw += a * d;
                    }
                }
            }
            grads.push(g);
            if l > 0 {
                let mut prev = Matrix::zeros(n, fan_in);
                for r in 0..n {
                    let d_row = delta.row(r);
                    let a_row = input.row(r);
                    for (k, out) in prev.row_mut(r).iter_mut().enumerate() {
                        // ReLU mask: the layer input is a post-ReLU activation
                        if a_row[k] > 0.0 {
                            *out = layer
                                .weight
                                .row(k)
                                .iter()
                                .zip(d_row)
                                .map(|(w, d)| w * d)
                                .sum();
                        }
                    }
                }
                delta = prev;
            }
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            kind: self.kind,
            dims: self.kind.widths(self.input_dim()),
            layers: self
                .layers
                .iter()
                .map(|l| LayerRecord {
                    weight: l.weight.iter_rows().map(<[f64]>::to_vec).collect(),
                    bias: l.bias.clone(),
                })
                .collect(),
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let layers = ckpt
            .layers
            .iter()
            .map(|rec| Dense::new(Matrix::from_rows(&rec.weight)?, rec.bias.clone()))
            .collect::<Result<Vec<_>>>()?;
        let model = Self::from_layers(ckpt.kind, layers)?;
        if model.kind.widths(model.input_dim()) != ckpt.dims {
            return Err(Error::InvalidDimension(format!(
                "checkpoint dims {:?} do not match its layers",
                ckpt.dims
            )));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(&self.to_checkpoint())?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt: Checkpoint = serde_json::from_str(&fs::read_to_string(path)?)?;
        Self::from_checkpoint(&ckpt)
    }
}

/// On-disk model: `{kind, dims, layers: [{weight, bias}]}`, weights as `fan_in` rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub kind: ModelKind,
    pub dims: Vec<usize>,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weight: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl Gradients {
    pub fn zeros_like(model: &RegressionModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| Dense::zeros(l.fan_in(), l.fan_out()))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    /// Flattened in the same order as [`RegressionModel::params`].
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.layers)
    }

    pub fn is_zero(&self) -> bool {
        self.flatten().iter().all(|&g| g == 0.0)
    }

    fn first_non_finite(&self) -> Option<String> {
        for (l, layer) in self.layers.iter().enumerate() {
            for r in 0..layer.weight.rows() {
                for (c, v) in layer.weight.row(r).iter().enumerate() {
                    if !v.is_finite() {
                        return Some(format!("layers[{l}].weight[{r}][{c}]"));
                    }
                }
            }
            if let Some(j) = layer.bias.iter().position(|v| !v.is_finite()) {
                return Some(format!("layers[{l}].bias[{j}]"));
            }
        }
        None
    }
}

fn flatten(layers: &[Dense]) -> Vec<f64> {
    layers
        .iter()
        .flat_map(|l| l.weight.as_slice().iter().chain(&l.bias).copied())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub b1: f64,
    pub b2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            b1: 0.9,
            b2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moment estimates for one model.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    config: AdamConfig,
    m: Vec<Dense>,
    v: Vec<Dense>,
    step: u64,
}

impl AdamState {
    pub fn new(model: &RegressionModel, config: AdamConfig) -> Self {
        let zeros = Gradients::zeros_like(model).layers;
        Self {
            config,
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// One bias-corrected Adam update. The model is left untouched when the
    /// gradient contains a non-finite entry.
    pub fn step(&mut self, model: &mut RegressionModel, grads: &Gradients) -> Result<()> {
        let congruent = grads.layers.len() == model.layers.len()
            && grads
                .layers
                .iter()
                .zip(&model.layers)
                .all(|(g, p)| g.weight.shape() == p.weight.shape());
        if !congruent || self.m.len() != model.layers.len() {
            return Err(Error::Shape {
                op: "adam_step",
                left: (model.num_params(), 1),
                right: (grads.flatten().len(), 1),
            });
        }
        if let Some(path) = grads.first_non_finite() {
            return Err(Error::NonFinite(format!("gradient {path}")));
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            b1,
            b2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - b1.powi(t);
        let c2 = 1.0 - b2.powi(t);
        for (((p, g), m), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            let params = p.weight.as_mut_slice().iter_mut().chain(p.bias.iter_mut());
            let gs = g.weight.as_slice().iter().chain(&g.bias);
            let ms = m.weight.as_mut_slice().iter_mut().chain(m.bias.iter_mut());
            let vs = v.weight.as_mut_slice().iter_mut().chain(v.bias.iter_mut());
            for (((theta, &gi), mi), vi) in params.zip(gs).zip(ms).zip(vs) {
                *mi = b1 * *mi + (1.0 - b1) * gi;
                *vi = b2 * *vi + (1.0 - b2) * gi * gi;
                let m_hat = *mi / c1;
                let v_hat = *vi / c2;
                *theta -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
