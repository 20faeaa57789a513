//! Voxel-wise regression networks with hand-derived gradients.
//!
//! Two architectures map one voxel to a scalar FA estimate: a dense ReLU
//! stack over the six normalized signals ([`ModelKind::Fcn`]) and a
//! spectral spherical CNN over the ADC profile sampled on an equiangular
//! grid ([`ModelKind::Scnn`]). Batches are `ndarray` matrices with one
//! sample per row.
//!
//! Work over a batch is split into fixed-size chunks that may run on any
//! number of threads; partial gradients are summed in chunk order, so
//! results do not depend on the thread count.

mod dense;
mod io;
mod ring;
mod scnn;

use std::sync::Arc;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::sphere::{num_coeffs, SHCoeffs, SphGrid, SphSignal, SphereError};
use crate::tensor::{adc, DiffusionTensor};

pub use io::{
    loss_trace_csv, model_from_bytes, model_to_bytes, read_model, write_loss_trace, write_model, MODEL_MAGIC,
};
pub(crate) use scnn::ScnnPlan;

/// Bandlimit of the grid carrying the S-CNN bias and activation.
pub const DEFAULT_ACT_BANDLIMIT: usize = 12;

/// ADC unit used to bring S-CNN inputs to O(1): 1.0e-3 mm²/s.
pub const ADC_UNIT: f64 = 1.0e-3;

/// Rows per independently evaluated chunk.
const CHUNK_ROWS: usize = 16;

#[derive(Debug, Error)]
pub enum NnError {
    #[error("expected input width {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("{inputs} inputs but {targets} targets")]
    TargetCount { inputs: usize, targets: usize },
    #[error("batch is empty")]
    EmptyBatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("invalid model spec: {0}")]
    InvalidSpec(String),
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("operation needs an {expected} model")]
    WrongKind { expected: &'static str },
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Fcn,
    Scnn,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Fcn => "fcn",
            ModelKind::Scnn => "scnn",
        }
    }
}

/// Hidden-layer nonlinearity. `Identity` linearizes the network, which
/// makes the S-CNN exactly rotation invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    #[inline]
    fn derivative(self, v: f64) -> f64 {
        match self {
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    /// Unit counts including input and output, e.g. `[6, 100, 100, 10, 1]`.
    pub fcn_layers: Vec<usize>,
    /// Channel counts per spectral layer boundary, e.g. `[1, 8, 8]`.
    pub scnn_channels: Vec<usize>,
    pub scnn_bandlimit: usize,
    /// Bandlimit of the grid on which S-CNN bias and activation act;
    /// values above `scnn_bandlimit` oversample the nonlinearity.
    pub scnn_act_bandlimit: usize,
    pub readout_hidden: usize,
    pub activation: Activation,
}

impl ModelSpec {
    pub fn fcn() -> Self {
        Self {
            kind: ModelKind::Fcn,
            fcn_layers: vec![6, 100, 100, 10, 1],
            scnn_channels: vec![1, 8, 8],
            scnn_bandlimit: crate::sphere::DEFAULT_BANDLIMIT,
            scnn_act_bandlimit: DEFAULT_ACT_BANDLIMIT,
            readout_hidden: 32,
            activation: Activation::Relu,
        }
    }

    pub fn scnn() -> Self {
        Self { kind: ModelKind::Scnn, ..Self::fcn() }
    }

    pub fn with_act_bandlimit(mut self, act_bandlimit: usize) -> Self {
        self.scnn_act_bandlimit = act_bandlimit;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let bad = |m: &str| Err(NnError::InvalidSpec(m.to_string()));
        match self.kind {
            ModelKind::Fcn => {
                if self.fcn_layers.len() < 2 || self.fcn_layers.contains(&0) {
                    return bad("fcn_layers needs at least input and output, all ≥ 1");
                }
                if *self.fcn_layers.last().unwrap() != 1 {
                    return bad("fcn output width must be 1");
                }
            }
            ModelKind::Scnn => {
                if self.scnn_channels.len() < 2 || self.scnn_channels.contains(&0) {
                    return bad("scnn_channels needs at least two entries, all ≥ 1");
                }
                if self.scnn_channels[0] != 1 {
                    return bad("scnn input has a single channel");
                }
                if self.scnn_bandlimit < 2 {
                    return bad("scnn_bandlimit must be at least 2");
                }
                if self.scnn_act_bandlimit < self.scnn_bandlimit {
                    return bad("scnn_act_bandlimit must be at least scnn_bandlimit");
                }
                if self.readout_hidden == 0 {
                    return bad("readout_hidden must be ≥ 1");
                }
            }
        }
        Ok(())
    }

    /// Width of one input row.
    pub fn input_len(&self) -> usize {
        match self.kind {
            ModelKind::Fcn => self.fcn_layers[0],
            ModelKind::Scnn => 4 * self.scnn_bandlimit * self.scnn_bandlimit,
        }
    }

    pub fn num_params(&self) -> usize {
        match self.kind {
            ModelKind::Fcn => dense::param_count(&self.fcn_layers),
            ModelKind::Scnn => scnn::param_count(self),
        }
    }

    fn fan_in(&self) -> Vec<usize> {
        match self.kind {
            ModelKind::Fcn => {
                let mut out = Vec::with_capacity(self.num_params());
                for w in self.fcn_layers.windows(2) {
                    out.extend(std::iter::repeat_n(w[0], w[0] * w[1]));
                    out.extend(std::iter::repeat_n(0, w[1]));
                }
                out
            }
            ModelKind::Scnn => scnn::fan_in(self),
        }
    }
}

/// Adam moments and step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct NetworkModel {
    spec: ModelSpec,
    params: Vec<f64>,
    adam: AdamState,
    plan: Option<Arc<ScnnPlan>>,
}

impl NetworkModel {
    /// He-uniform initialization: weights `U(±√(6/fan_in))`, zero biases.
    pub fn new(spec: ModelSpec, seed: u64) -> Result<Self, NnError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = spec
            .fan_in()
            .into_iter()
            .map(|f| {
                if f == 0 {
                    0.0
                } else {
                    let a = (6.0 / f as f64).sqrt();
                    rng.random_range(-a..a)
                }
            })
            .collect();
        Self::from_params(spec, params)
    }

    pub fn zeros(spec: ModelSpec) -> Result<Self, NnError> {
        let n = spec.num_params();
        Self::from_params(spec, vec![0.0; n])
    }

    pub fn from_params(spec: ModelSpec, params: Vec<f64>) -> Result<Self, NnError> {
        spec.validate()?;
        if params.len() != spec.num_params() {
            return Err(NnError::InvalidSpec(format!(
                "expected {} parameters, got {}",
                spec.num_params(),
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(NnError::InvalidSpec("non-finite parameter".into()));
        }
        let plan = match spec.kind {
            ModelKind::Scnn => Some(Arc::new(ScnnPlan::new(spec.scnn_bandlimit, spec.scnn_act_bandlimit)?)),
            ModelKind::Fcn => None,
        };
        let n = params.len();
        Ok(Self { spec, params, adam: AdamState { m: vec![0.0; n], v: vec![0.0; n], t: 0 }, plan })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.spec.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn adam_state(&self) -> &AdamState {
        &self.adam
    }

    /// Sampling grid of an S-CNN's inputs.
    pub fn grid(&self) -> Option<&Arc<SphGrid>> {
        self.plan.as_ref().map(|p| &p.grid)
    }

    fn check_width(&self, width: usize) -> Result<(), NnError> {
        let expected = self.spec.input_len();
        if width != expected {
            return Err(NnError::ShapeMismatch { expected, got: width });
        }
        Ok(())
    }

    fn forward_chunk(&self, x: ArrayView2<f64>) -> Vec<f64> {
        match self.spec.kind {
            ModelKind::Fcn => {
                let (out, _) = dense::forward(&self.spec.fcn_layers, &self.params, x.to_owned(), self.spec.activation);
                out.column(0).to_vec()
            }
            ModelKind::Scnn => scnn::forward(&self.spec, self.plan.as_ref().unwrap(), &self.params, x).0,
        }
    }

    /// Returns the chunk's outputs and the gradient of `Σ dy_i · y_i`,
    /// where `dy` is computed from the outputs.
    fn chunk_grad(&self, x: ArrayView2<f64>, dy: impl Fn(usize, f64) -> f64) -> (Vec<f64>, Vec<f64>) {
        match self.spec.kind {
            ModelKind::Fcn => {
                let act = self.spec.activation;
                let (out, tape) = dense::forward(&self.spec.fcn_layers, &self.params, x.to_owned(), act);
                let y = out.column(0).to_vec();
                let d = Array2::from_shape_fn((y.len(), 1), |(i, _)| dy(i, y[i]));
                let mut grad = vec![0.0; self.params.len()];
                dense::backward(&self.spec.fcn_layers, &self.params, &tape, d, act, &mut grad);
                (y, grad)
            }
            ModelKind::Scnn => {
                let plan = self.plan.as_ref().unwrap();
                let (y, tape) = scnn::forward(&self.spec, plan, &self.params, x);
                let d: Vec<f64> = y.iter().enumerate().map(|(i, &v)| dy(i, v)).collect();
                let grad = scnn::backward(&self.spec, plan, &self.params, &tape, &d);
                (y, grad)
            }
        }
    }

    /// Raw network output for one input row.
    pub fn forward(&self, input: &[f64]) -> Result<f64, NnError> {
        self.check_width(input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row");
        Ok(self.forward_chunk(x)[0])
    }

    /// Raw S-CNN output for a grid signal, scaled by [`ADC_UNIT`] by the
    /// caller (see [`adc_input`]).
    pub fn forward_signal(&self, signal: &SphSignal) -> Result<f64, NnError> {
        if self.spec.kind != ModelKind::Scnn {
            return Err(NnError::WrongKind { expected: "scnn" });
        }
        if signal.grid().bandlimit() != self.spec.scnn_bandlimit {
            return Err(NnError::ShapeMismatch { expected: self.spec.input_len(), got: signal.values().len() });
        }
        self.forward(signal.values())
    }

    /// Raw outputs for every row, in order.
    pub fn forward_batch(&self, inputs: ArrayView2<f64>) -> Result<Vec<f64>, NnError> {
        if inputs.nrows() == 0 {
            return Ok(Vec::new());
        }
        self.check_width(inputs.ncols())?;
        let chunks: Vec<_> = inputs.axis_chunks_iter(Axis(0), CHUNK_ROWS).collect();
        let parts: Vec<Vec<f64>> = chunks.into_par_iter().map(|c| self.forward_chunk(c)).collect();
        Ok(parts.concat())
    }

    /// Mean squared error over the batch and its exact gradient.
    pub fn loss_and_grad(&self, inputs: ArrayView2<f64>, targets: &[f64]) -> Result<(f64, Vec<f64>), NnError> {
        if inputs.nrows() == 0 {
            return Err(NnError::EmptyBatch);
        }
        self.check_width(inputs.ncols())?;
        if targets.len() != inputs.nrows() {
            return Err(NnError::TargetCount { inputs: inputs.nrows(), targets: targets.len() });
        }
        let n = inputs.nrows() as f64;
        let chunks: Vec<_> = inputs
            .axis_chunks_iter(Axis(0), CHUNK_ROWS)
            .zip(targets.chunks(CHUNK_ROWS))
            .collect();
        let parts: Vec<(f64, Vec<f64>)> = chunks
            .into_par_iter()
            .map(|(x, t)| {
                let (y, g) = self.chunk_grad(x, |i, v| 2.0 * (v - t[i]) / n);
                let sse: f64 = y.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum();
                (sse, g)
            })
            .collect();
        let mut sse = 0.0;
        let mut grad = vec![0.0; self.params.len()];
        for (s, g) in parts {
            sse += s;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        Ok((sse / n, grad))
    }

    /// One Adam update with the standard moment decay rates.
    pub fn adam_step(&mut self, grad: &[f64], lr: f64) {
        assert_eq!(grad.len(), self.params.len(), "gradient not aligned with parameters");
        let st = &mut self.adam;
        st.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(st.t as i32);
        let c2 = 1.0 - ADAM_BETA2.powi(st.t as i32);
        for (((p, m), v), &g) in self.params.iter_mut().zip(&mut st.m).zip(&mut st.v).zip(grad) {
            // A decaying moment would otherwise settle on the smallest
            // subnormal, since β times it rounds back up, and every later
            // step would run at subnormal speed.
            *m = flush(ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g);
            *v = flush(ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g);
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

/// S-CNN input row: the tensor's ADC profile on `grid`, in units of
/// [`ADC_UNIT`].
pub fn adc_input(dt: &DiffusionTensor, grid: &SphGrid) -> Vec<f64> {
    grid.dirs().iter().map(|g| adc(dt, g) / ADC_UNIT).collect()
}

/// One spectral layer in isolation: channel mixing with per-degree
/// weights `w[c_out][c_in][ℓ]`, shared across orders.
pub fn spectral_filter(inputs: &[SHCoeffs], weights: &[f64], c_out: usize) -> Result<Vec<SHCoeffs>, NnError> {
    let Some(first) = inputs.first() else {
        return Ok(Vec::new());
    };
    let l = first.bandlimit();
    let k = num_coeffs(l);
    let c_in = inputs.len();
    if inputs.iter().any(|c| c.bandlimit() != l) {
        return Err(NnError::InvalidSpec("channels with different bandlimits".into()));
    }
    if weights.len() != c_out * c_in * l {
        return Err(NnError::ShapeMismatch { expected: c_out * c_in * l, got: weights.len() });
    }
    let c = Array2::from_shape_fn((c_in, k), |(i, j)| inputs[i].as_slice()[j]);
    let h = scnn::mix(&c, weights, c_in, c_out, &scnn::degrees(l), l);
    Ok(h.rows()
        .into_iter()
        .map(|r| SHCoeffs::from_vec(l, r.to_vec()).expect("L² coefficients"))
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { epochs: 50, learning_rate: 1e-3, batch_size: 32, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        if self.epochs == 0 || self.batch_size == 0 || !(self.learning_rate > 0.0) {
            return Err(NnError::InvalidConfig(format!("{self:?}")));
        }
        Ok(())
    }
}

/// Minibatch Adam on the mean squared error. Each epoch visits the
/// dataset in an order drawn from a generator seeded by `cfg.seed`; the
/// returned trace holds each epoch's mean training loss.
pub fn train(
    mut model: NetworkModel,
    inputs: ArrayView2<f64>,
    targets: &[f64],
    cfg: &TrainConfig,
) -> Result<(NetworkModel, Vec<f64>), NnError> {
    cfg.validate()?;
    if inputs.nrows() == 0 {
        return Err(NnError::EmptyDataset);
    }
    model.check_width(inputs.ncols())?;
    if targets.len() != inputs.nrows() {
        return Err(NnError::TargetCount { inputs: inputs.nrows(), targets: targets.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..inputs.nrows()).collect();
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let x = inputs.select(Axis(0), idx);
            let t: Vec<f64> = idx.iter().map(|&i| targets[i]).collect();
            let (mse, grad) = model.loss_and_grad(x.view(), &t)?;
            total += mse * idx.len() as f64;
            model.adam_step(&grad, cfg.learning_rate);
        }
        trace.push(total / inputs.nrows() as f64);
    }
    Ok((model, trace))
}

/// Outputs clamped to `[0, 1]`, in input order.
pub fn predict_batch(model: &NetworkModel, inputs: ArrayView2<f64>) -> Result<Vec<f64>, NnError> {
    Ok(model.forward_batch(inputs)?.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
}
