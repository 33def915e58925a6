//! Feed-forward acoustic model: source cepstrum in, differential cepstrum out.
//!
//! Each hidden layer is a gated linear unit with two affine branches, each
//! batch-normalised before its activation:
//!
//! ```text
//! h = tanh(BN_v(W_v x + b_v)) ⊙ sigmoid(BN_g(W_g x + b_g))
//! ```
//!
//! followed by a plain linear projection back to the cepstral dimension.
//! Inputs are standardised with training-set statistics and outputs are
//! mapped back with the statistics of the training differentials.

mod adam;
mod io;

use ndarray::{Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cepstrum::Lifter;
use crate::error::{Error, Result};
use crate::spectral::AnalysisConfig;

pub use adam::AdamState;
pub use io::{load_model, load_model_for, model_from_bytes, model_to_bytes, save_model, MODEL_MAGIC, MODEL_VERSION};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;
const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm.
    Train,
    /// Running statistics in batch norm.
    Infer,
}

/// Per-dimension affine standardisation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Normalizer {
    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            std: vec![1.0; dim],
        }
    }

    /// Mean and (population) standard deviation of each column.
    pub fn fit(rows: &Array2<f64>) -> Result<Self> {
        if rows.nrows() == 0 {
            return Err(Error::EmptyInput("normalizer fit"));
        }
        let mean = rows.mean_axis(Axis(0)).expect("nonempty");
        let std = rows.var_axis(Axis(0), 0.0).mapv(|v| v.sqrt().max(STD_FLOOR));
        Ok(Self {
            mean: mean.to_vec(),
            std: std.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn normalize(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = (*v - m) / s;
            }
        }
        out
    }

    pub fn denormalize(&self, x: &Array2<f64>) -> Array2<f64> {
        let mut out = x.clone();
        for mut row in out.rows_mut() {
            for ((v, m), s) in row.iter_mut().zip(&self.mean).zip(&self.std) {
                *v = *v * s + m;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// `out × in`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = (1.0 / inputs as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((outputs, inputs), |_| rng.gen_range(-bound..bound)),
            bias: Array1::from_shape_fn(outputs, |_| rng.gen_range(-bound..bound)),
        }
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            weight: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
        }
    }

    fn apply(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight.t()) + &self.bias
    }

    pub fn inputs(&self) -> usize {
        self.weight.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.nrows()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(dim: usize) -> Self {
        Self {
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
            running_mean: Array1::zeros(dim),
            running_var: Array1::ones(dim),
        }
    }

    fn forward(&self, a: &Array2<f64>, mode: Mode) -> (Array2<f64>, BnCache) {
        let (mean, var) = match mode {
            Mode::Train => (
                a.mean_axis(Axis(0)).expect("nonempty batch"),
                a.var_axis(Axis(0), 0.0),
            ),
            Mode::Infer => (self.running_mean.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let x_hat = (a - &mean) * &inv_std;
        let y = &x_hat * &self.gamma + &self.beta;
        (
            y,
            BnCache {
                x_hat,
                inv_std,
                batch_mean: mean,
                batch_var: var,
            },
        )
    }

    /// Returns `(∂γ, ∂β, ∂a)`.
    fn backward(
        &self,
        cache: &BnCache,
        grad_y: &Array2<f64>,
        mode: Mode,
    ) -> (Array1<f64>, Array1<f64>, Array2<f64>) {
        let grad_gamma = (grad_y * &cache.x_hat).sum_axis(Axis(0));
        let grad_beta = grad_y.sum_axis(Axis(0));
        let grad_xhat = grad_y * &self.gamma;
        let grad_a = match mode {
            Mode::Infer => grad_xhat * &cache.inv_std,
            Mode::Train => {
                let b = grad_y.nrows() as f64;
                let sum_g = grad_xhat.sum_axis(Axis(0));
                let sum_gx = (&grad_xhat * &cache.x_hat).sum_axis(Axis(0));
                let centred = grad_xhat * b - &sum_g - &cache.x_hat * &sum_gx;
                centred * &cache.inv_std / b
            }
        };
        (grad_gamma, grad_beta, grad_a)
    }

    fn update_running(&mut self, cache: &BnCache, batch: usize) {
        let unbias = if batch > 1 {
            batch as f64 / (batch as f64 - 1.0)
        } else {
            1.0
        };
        self.running_mean = &self.running_mean * (1.0 - BN_MOMENTUM) + &cache.batch_mean * BN_MOMENTUM;
        self.running_var =
            &self.running_var * (1.0 - BN_MOMENTUM) + &cache.batch_var * (BN_MOMENTUM * unbias);
    }
}

#[derive(Clone, Debug)]
struct BnCache {
    x_hat: Array2<f64>,
    inv_std: Array1<f64>,
    batch_mean: Array1<f64>,
    batch_var: Array1<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GluLayer {
    pub value: Linear,
    pub gate: Linear,
    pub bn_value: BatchNorm,
    pub bn_gate: BatchNorm,
}

impl GluLayer {
    fn init(inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            value: Linear::init(inputs, outputs, rng),
            gate: Linear::init(inputs, outputs, rng),
            bn_value: BatchNorm::new(outputs),
            bn_gate: BatchNorm::new(outputs),
        }
    }

    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            value: Linear::zeros(inputs, outputs),
            gate: Linear::zeros(inputs, outputs),
            bn_value: BatchNorm::new(outputs),
            bn_gate: BatchNorm::new(outputs),
        }
    }
}

#[derive(Clone, Debug)]
struct LayerCache {
    input: Array2<f64>,
    bn_value: BnCache,
    bn_gate: BnCache,
    tanh: Array2<f64>,
    sigmoid: Array2<f64>,
}

/// Intermediates kept by [`AcousticModel::forward_batch`] for the backward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    mode: Mode,
    layers: Vec<LayerCache>,
    last_hidden: Array2<f64>,
}

impl ForwardCache {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn batch_size(&self) -> usize {
        self.last_hidden.nrows()
    }
}

/// Gradients laid out like [`AcousticModel::parameters`].
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGrads {
    pub tensors: Vec<Vec<f64>>,
}

impl ModelGrads {
    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.tensors.iter().map(Vec::as_slice).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcousticModel {
    pub analysis: AnalysisConfig,
    pub hidden: Vec<usize>,
    pub layers: Vec<GluLayer>,
    pub output: Linear,
    pub input_norm: Normalizer,
    pub output_norm: Normalizer,
    pub lifter: Lifter,
}

impl AcousticModel {
    /// Hidden sizes used for a given analysis setup: 280/100 at 16 kHz and
    /// 840/300 at 48 kHz.
    pub fn default_hidden(cfg: &AnalysisConfig) -> Vec<usize> {
        if cfg.sample_rate >= 48_000 {
            vec![840, 300]
        } else {
            vec![280, 100]
        }
    }

    /// Uniform(±1/√fan_in) weights, identity batch norm, identity
    /// normalisers and the minimum-phase lifter.
    pub fn new(cfg: &AnalysisConfig, hidden: &[usize], seed: u64) -> Result<Self> {
        cfg.validate()?;
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad hidden sizes {hidden:?}")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = cfg.cep_dim;
        let mut layers = Vec::with_capacity(hidden.len());
        let mut fan_in = c;
        for &h in hidden {
            layers.push(GluLayer::init(fan_in, h, &mut rng));
            fan_in = h;
        }
        Ok(Self {
            analysis: *cfg,
            hidden: hidden.to_vec(),
            layers,
            output: Linear::init(fan_in, c, &mut rng),
            input_norm: Normalizer::identity(c),
            output_norm: Normalizer::identity(c),
            lifter: Lifter::minimum_phase(cfg)?,
        })
    }

    /// All weights and biases zero; the output is then exactly the output
    /// normaliser's mean.
    pub fn zeros(cfg: &AnalysisConfig, hidden: &[usize]) -> Result<Self> {
        let mut model = Self::new(cfg, hidden, 0)?;
        let c = cfg.cep_dim;
        let mut fan_in = c;
        for (layer, &h) in model.layers.iter_mut().zip(hidden) {
            *layer = GluLayer::zeros(fan_in, h);
            fan_in = h;
        }
        model.output = Linear::zeros(fan_in, c);
        Ok(model)
    }

    /// A model that always emits `cep_d`, whatever its input.
    pub fn constant(cfg: &AnalysisConfig, hidden: &[usize], cep_d: &[f64]) -> Result<Self> {
        if cep_d.len() != cfg.cep_dim {
            return Err(Error::LengthMismatch {
                what: "constant output",
                expected: cfg.cep_dim,
                actual: cep_d.len(),
            });
        }
        let mut model = Self::zeros(cfg, hidden)?;
        model.output_norm.mean = cep_d.to_vec();
        Ok(model)
    }

    pub fn cep_dim(&self) -> usize {
        self.analysis.cep_dim
    }

    /// Trainable tensors in declaration order: per layer the value weight and
    /// bias, gate weight and bias, value BN scale and shift, gate BN scale and
    /// shift; then the output weight and bias.
    pub fn parameters(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for l in &self.layers {
            out.push(l.value.weight.as_slice().expect("standard layout"));
            out.push(l.value.bias.as_slice().expect("standard layout"));
            out.push(l.gate.weight.as_slice().expect("standard layout"));
            out.push(l.gate.bias.as_slice().expect("standard layout"));
            out.push(l.bn_value.gamma.as_slice().expect("standard layout"));
            out.push(l.bn_value.beta.as_slice().expect("standard layout"));
            out.push(l.bn_gate.gamma.as_slice().expect("standard layout"));
            out.push(l.bn_gate.beta.as_slice().expect("standard layout"));
        }
        out.push(self.output.weight.as_slice().expect("standard layout"));
        out.push(self.output.bias.as_slice().expect("standard layout"));
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(l.value.weight.as_slice_mut().expect("standard layout"));
            out.push(l.value.bias.as_slice_mut().expect("standard layout"));
            out.push(l.gate.weight.as_slice_mut().expect("standard layout"));
            out.push(l.gate.bias.as_slice_mut().expect("standard layout"));
            out.push(l.bn_value.gamma.as_slice_mut().expect("standard layout"));
            out.push(l.bn_value.beta.as_slice_mut().expect("standard layout"));
            out.push(l.bn_gate.gamma.as_slice_mut().expect("standard layout"));
            out.push(l.bn_gate.beta.as_slice_mut().expect("standard layout"));
        }
        out.push(self.output.weight.as_slice_mut().expect("standard layout"));
        out.push(self.output.bias.as_slice_mut().expect("standard layout"));
        out
    }

    pub fn parameter_sizes(&self) -> Vec<usize> {
        self.parameters().iter().map(|p| p.len()).collect()
    }

    fn check_input(&self, x: &Array2<f64>) -> Result<()> {
        if x.ncols() != self.cep_dim() {
            return Err(Error::LengthMismatch {
                what: "model input",
                expected: self.cep_dim(),
                actual: x.ncols(),
            });
        }
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("model batch"));
        }
        Ok(())
    }

    /// Forward pass over a batch (rows are frames). Does not touch running
    /// statistics; see [`AcousticModel::commit_batch_statistics`].
    pub fn forward_batch(&self, x: &Array2<f64>, mode: Mode) -> Result<(Array2<f64>, ForwardCache)> {
        self.check_input(x)?;
        let mut h = self.input_norm.normalize(x);
        let mut caches = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let (bv, cache_v) = layer.bn_value.forward(&layer.value.apply(&h), mode);
            let (bg, cache_g) = layer.bn_gate.forward(&layer.gate.apply(&h), mode);
            let tanh = bv.mapv(f64::tanh);
            let sigmoid = bg.mapv(|v| 1.0 / (1.0 + (-v).exp()));
            let next = &tanh * &sigmoid;
            caches.push(LayerCache {
                input: h,
                bn_value: cache_v,
                bn_gate: cache_g,
                tanh,
                sigmoid,
            });
            h = next;
        }
        let out = self.output_norm.denormalize(&self.output.apply(&h));
        Ok((
            out,
            ForwardCache {
                mode,
                layers: caches,
                last_hidden: h,
            },
        ))
    }

    /// Inference-mode forward pass.
    pub fn infer(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.forward_batch(x, Mode::Infer)?.0)
    }

    /// Forward pass that, in train mode, also folds the batch statistics into
    /// the running estimates.
    pub fn forward(&mut self, x: &Array2<f64>, mode: Mode) -> Result<Array2<f64>> {
        let (out, cache) = self.forward_batch(x, mode)?;
        if mode == Mode::Train {
            self.commit_batch_statistics(&cache);
        }
        Ok(out)
    }

    pub fn commit_batch_statistics(&mut self, cache: &ForwardCache) {
        if cache.mode != Mode::Train {
            return;
        }
        let batch = cache.batch_size();
        for (layer, lc) in self.layers.iter_mut().zip(&cache.layers) {
            layer.bn_value.update_running(&lc.bn_value, batch);
            layer.bn_gate.update_running(&lc.bn_gate, batch);
        }
    }

    /// Reverse pass. `grad_out` is `∂L/∂output` (same shape as the output);
    /// returns parameter gradients and `∂L/∂input`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &Array2<f64>) -> Result<(ModelGrads, Array2<f64>)> {
        if grad_out.dim() != (cache.batch_size(), self.cep_dim()) {
            return Err(Error::ShapeMismatch(format!(
                "output gradient {:?} vs batch {}×{}",
                grad_out.dim(),
                cache.batch_size(),
                self.cep_dim()
            )));
        }
        let out_std = Array1::from(self.output_norm.std.clone());
        let grad_raw = grad_out * &out_std;

        let mut tensors: Vec<Vec<f64>> = Vec::new();
        let grad_w_out = grad_raw.t().dot(&cache.last_hidden);
        let grad_b_out = grad_raw.sum_axis(Axis(0));
        let mut grad_h = grad_raw.dot(&self.output.weight);

        let mut per_layer: Vec<[Vec<f64>; 8]> = Vec::with_capacity(self.layers.len());
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            let grad_tanh = &grad_h * &lc.sigmoid;
            let grad_sig = &grad_h * &lc.tanh;
            let grad_bv = grad_tanh * lc.tanh.mapv(|t| 1.0 - t * t);
            let grad_bg = grad_sig * lc.sigmoid.mapv(|s| s * (1.0 - s));
            let (g_gamma_v, g_beta_v, grad_av) = layer.bn_value.backward(&lc.bn_value, &grad_bv, cache.mode);
            let (g_gamma_g, g_beta_g, grad_ag) = layer.bn_gate.backward(&lc.bn_gate, &grad_bg, cache.mode);
            let g_wv = grad_av.t().dot(&lc.input);
            let g_bv = grad_av.sum_axis(Axis(0));
            let g_wg = grad_ag.t().dot(&lc.input);
            let g_bg = grad_ag.sum_axis(Axis(0));
            grad_h = grad_av.dot(&layer.value.weight) + grad_ag.dot(&layer.gate.weight);
            per_layer.push([
                into_vec(g_wv),
                g_bv.to_vec(),
                into_vec(g_wg),
                g_bg.to_vec(),
                g_gamma_v.to_vec(),
                g_beta_v.to_vec(),
                g_gamma_g.to_vec(),
                g_beta_g.to_vec(),
            ]);
        }
        for group in per_layer.into_iter().rev() {
            tensors.extend(group);
        }
        tensors.push(into_vec(grad_w_out));
        tensors.push(grad_b_out.to_vec());

        let in_std = Array1::from(self.input_norm.std.clone());
        let grad_input = grad_h / &in_std;
        Ok((ModelGrads { tensors }, grad_input))
    }
}

fn into_vec(a: Array2<f64>) -> Vec<f64> {
    if a.is_standard_layout() {
        a.into_raw_vec_and_offset().0
    } else {
        a.iter().copied().collect()
    }
}

/// Stacks equal-length rows into a matrix.
pub fn rows_to_matrix(rows: &[&[f64]]) -> Result<Array2<f64>> {
    let cols = rows.first().map_or(0, |r| r.len());
    let mut out = Array2::zeros((rows.len(), cols));
    for (i, r) in rows.iter().enumerate() {
        if r.len() != cols {
            return Err(Error::LengthMismatch {
                what: "matrix row",
                expected: cols,
                actual: r.len(),
            });
        }
        out.row_mut(i).assign(&ndarray::ArrayView1::from(*r));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
