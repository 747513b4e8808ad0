//! Fully connected softmax classifier with manual backprop.
//!
//! Parameters are one flat vector: for every layer the weight matrix
//! (`out x in`, row-major) followed by its bias. Noise is a multiplicative
//! Bernoulli mask on hidden activations, drawn once per `begin_step` and
//! reused by every evaluation until the next one.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Sample;
use crate::error::{check_dim, Error, Result};
use crate::{LossOracle, Vector};

const NOISE_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Relu => if z < 0.0 { 0.0 } else { z },
        }
    }

    /// Derivative expressed through the pre-activation `z` and output `h`.
    fn derivative(self, z: f64, h: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    None,
    /// Inverted-dropout style mask: each hidden unit is kept with
    /// probability `keep_prob` and rescaled by `1 / keep_prob`.
    MultiplicativeMask { keep_prob: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpConfig {
    /// Layer widths including input and output, e.g. `[2, 16, 2]`.
    pub layer_dims: Vec<usize>,
    pub activation: Activation,
    pub batch_size: usize,
    pub noise: NoiseKind,
    /// Seeds batch order and noise draws.
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            layer_dims: vec![2, 16, 2],
            activation: Activation::Relu,
            batch_size: 256,
            noise: NoiseKind::MultiplicativeMask { keep_prob: 0.8 },
            seed: 0,
        }
    }
}

/// Masks for one step, one `batch x width` matrix per hidden layer. Empty
/// when the problem has no noise.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NoiseDraw {
    pub masks: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone)]
pub struct MlpProblem {
    config: MlpConfig,
    data: Vec<Sample>,
    layer_offsets: Vec<usize>,
    num_params: usize,
    order: Vec<usize>,
    order_epoch: Option<u64>,
    batch: Vec<usize>,
    noise: NoiseDraw,
}

struct Forward {
    /// Input to each layer (`inputs[0]` is the data batch).
    inputs: Vec<DMatrix<f64>>,
    /// Hidden pre-activations and unmasked activations.
    pre: Vec<DMatrix<f64>>,
    act: Vec<DMatrix<f64>>,
    logits: DMatrix<f64>,
}

impl MlpProblem {
    pub fn new(config: MlpConfig, data: Vec<Sample>) -> Result<Self> {
        let dims = &config.layer_dims;
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::invalid("layer_dims needs at least two positive widths"));
        }
        if data.is_empty() {
            return Err(Error::invalid("dataset is empty"));
        }
        if config.batch_size == 0 || config.batch_size > data.len() {
            return Err(Error::invalid(format!(
                "batch_size must lie in [1, {}], got {}",
                data.len(),
                config.batch_size
            )));
        }
        if let NoiseKind::MultiplicativeMask { keep_prob } = config.noise {
            if !(keep_prob > 0.0 && keep_prob <= 1.0) {
                return Err(Error::invalid(format!("keep_prob must lie in (0, 1], got {keep_prob}")));
            }
        }
        let classes = *dims.last().unwrap();
        for (i, s) in data.iter().enumerate() {
            check_dim(dims[0], s.features.len())?;
            if s.label >= classes {
                return Err(Error::invalid(format!(
                    "sample {i} has label {} but the network has {classes} outputs",
                    s.label
                )));
            }
        }

        let mut layer_offsets = Vec::with_capacity(dims.len());
        let mut offset = 0;
        for w in dims.windows(2) {
            layer_offsets.push(offset);
            offset += w[1] * w[0] + w[1];
        }
        layer_offsets.push(offset);

        let mut problem = MlpProblem {
            order: (0..data.len()).collect(),
            config,
            data,
            layer_offsets,
            num_params: offset,
            order_epoch: None,
            batch: Vec::new(),
            noise: NoiseDraw::default(),
        };
        problem.begin_step(0);
        Ok(problem)
    }

    pub fn config(&self) -> &MlpConfig {
        &self.config
    }

    pub fn data(&self) -> &[Sample] {
        &self.data
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn current_batch(&self) -> &[usize] {
        &self.batch
    }

    pub fn current_noise(&self) -> &NoiseDraw {
        &self.noise
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, seed: u64) -> Vector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = Vector::zeros(self.num_params);
        for (l, w) in self.config.layer_dims.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let start = self.layer_offsets[l];
            for k in start..start + fan_in * fan_out {
                theta[k] = rng.random_range(-limit..limit);
            }
        }
        theta
    }

    fn batches_per_epoch(&self) -> u64 {
        (self.data.len() / self.config.batch_size).max(1) as u64
    }

    /// Draws a fresh noise realization for `batch_len` samples.
    pub fn draw_noise(&self, step: u64, batch_len: usize) -> NoiseDraw {
        let NoiseKind::MultiplicativeMask { keep_prob } = self.config.noise else {
            return NoiseDraw::default();
        };
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed ^ NOISE_SEED_SALT);
        rng.set_stream(step);
        let dims = &self.config.layer_dims;
        let masks = dims[1..dims.len() - 1]
            .iter()
            .map(|&width| {
                DMatrix::from_fn(batch_len, width, |_, _| {
                    if rng.random::<f64>() < keep_prob {
                        1.0 / keep_prob
                    } else {
                        0.0
                    }
                })
            })
            .collect();
        NoiseDraw { masks }
    }

    fn unpack<'a>(&self, theta: &'a Vector, layer: usize) -> (DMatrix<f64>, &'a [f64]) {
        let dims = &self.config.layer_dims;
        let (fan_in, fan_out) = (dims[layer], dims[layer + 1]);
        let start = self.layer_offsets[layer];
        let slice = theta.as_slice();
        let w = DMatrix::from_row_slice(fan_out, fan_in, &slice[start..start + fan_in * fan_out]);
        let b = &slice[start + fan_in * fan_out..self.layer_offsets[layer + 1]];
        (w, b)
    }

    fn inputs_for(&self, batch: &[usize]) -> DMatrix<f64> {
        let d = self.config.layer_dims[0];
        DMatrix::from_fn(batch.len(), d, |i, j| self.data[batch[i]].features[j])
    }

    fn forward(&self, theta: &Vector, batch: &[usize], noise: &NoiseDraw) -> Result<Forward> {
        check_dim(self.num_params, theta.len())?;
        let layers = self.config.layer_dims.len() - 1;
        if !noise.masks.is_empty() {
            if noise.masks.len() != layers - 1 {
                return Err(Error::invalid("noise draw does not match the hidden layers"));
            }
            if noise.masks.iter().any(|m| m.nrows() != batch.len()) {
                return Err(Error::invalid("noise draw does not match the batch size"));
            }
        }

        let mut inputs = vec![self.inputs_for(batch)];
        let mut pre = Vec::with_capacity(layers - 1);
        let mut act = Vec::with_capacity(layers - 1);
        for l in 0..layers {
            let (w, b) = self.unpack(theta, l);
            let mut z = &inputs[l] * w.transpose();
            for mut row in z.row_iter_mut() {
                for (v, bias) in row.iter_mut().zip(b) {
                    *v += bias;
                }
            }
            if l + 1 == layers {
                if z.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Diverged {
                        loss: f64::NAN,
                        theta: theta.clone(),
                    });
                }
                return Ok(Forward {
                    inputs,
                    pre,
                    act,
                    logits: z,
                });
            }
            let h = z.map(|v| self.config.activation.apply(v));
            let next = match noise.masks.get(l) {
                Some(mask) => h.component_mul(mask),
                None => h.clone(),
            };
            pre.push(z);
            act.push(h);
            inputs.push(next);
        }
        unreachable!("loop returns on the output layer")
    }

    /// Row-wise softmax probabilities and mean cross-entropy.
    fn softmax_loss(&self, logits: &DMatrix<f64>, batch: &[usize]) -> (DMatrix<f64>, f64) {
        let mut probs = logits.clone();
        let mut loss = 0.0;
        for (i, mut row) in probs.row_iter_mut().enumerate() {
            let max = row.max();
            let log_norm = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            loss -= row[self.data[batch[i]].label] - log_norm;
            row.apply(|v| *v = (*v - log_norm).exp());
        }
        (probs, loss / batch.len() as f64)
    }

    /// Mean cross-entropy over `batch` under `noise`.
    pub fn loss(&self, theta: &Vector, batch: &[usize], noise: &NoiseDraw) -> Result<f64> {
        let fwd = self.forward(theta, batch, noise)?;
        let (_, loss) = self.softmax_loss(&fwd.logits, batch);
        if loss.is_finite() {
            Ok(loss)
        } else {
            Err(Error::Diverged {
                loss,
                theta: theta.clone(),
            })
        }
    }

    /// Mean cross-entropy over `batch` and its gradient by backprop.
    pub fn loss_and_grad(&self, theta: &Vector, batch: &[usize], noise: &NoiseDraw) -> Result<(f64, Vector)> {
        let fwd = self.forward(theta, batch, noise)?;
        let (probs, loss) = self.softmax_loss(&fwd.logits, batch);
        if !loss.is_finite() {
            return Err(Error::Diverged {
                loss,
                theta: theta.clone(),
            });
        }

        let scale = 1.0 / batch.len() as f64;
        let mut delta = probs;
        for (i, &idx) in batch.iter().enumerate() {
            delta[(i, self.data[idx].label)] -= 1.0;
        }
        delta *= scale;

        let mut grad = Vector::zeros(self.num_params);
        let layers = self.config.layer_dims.len() - 1;
        for l in (0..layers).rev() {
            let dw = delta.transpose() * &fwd.inputs[l];
            let start = self.layer_offsets[l];
            let (fan_out, fan_in) = dw.shape();
            let g = grad.as_mut_slice();
            for r in 0..fan_out {
                for c in 0..fan_in {
                    g[start + r * fan_in + c] = dw[(r, c)];
                }
                g[start + fan_out * fan_in + r] = delta.column(r).sum();
            }
            if l == 0 {
                break;
            }
            let (w, _) = self.unpack(theta, l);
            let mut upstream = &delta * w;
            let (z, h) = (&fwd.pre[l - 1], &fwd.act[l - 1]);
            for ((u, zv), hv) in upstream.iter_mut().zip(z.iter()).zip(h.iter()) {
                *u *= self.config.activation.derivative(*zv, *hv);
            }
            if let Some(mask) = noise.masks.get(l - 1) {
                upstream.component_mul_assign(mask);
            }
            delta = upstream;
        }
        Ok((loss, grad))
    }

    /// Noise-free mean cross-entropy over the whole dataset.
    pub fn dataset_loss(&self, theta: &Vector) -> Result<f64> {
        let all: Vec<usize> = (0..self.data.len()).collect();
        self.loss(theta, &all, &NoiseDraw::default())
    }

    /// Fraction of samples whose arg-max prediction matches the label.
    pub fn dataset_accuracy(&self, theta: &Vector) -> Result<f64> {
        let all: Vec<usize> = (0..self.data.len()).collect();
        let fwd = self.forward(theta, &all, &NoiseDraw::default())?;
        let correct = fwd
            .logits
            .row_iter()
            .zip(&self.data)
            .filter(|(row, s)| row.transpose().argmax().0 == s.label)
            .count();
        Ok(correct as f64 / self.data.len() as f64)
    }
}

impl LossOracle for MlpProblem {
    fn dimension(&self) -> usize {
        self.num_params
    }

    /// Sequential batches over a per-epoch shuffled order, plus one noise
    /// draw keyed by `step`.
    fn begin_step(&mut self, step: u64) {
        let per_epoch = self.batches_per_epoch();
        let epoch = step / per_epoch;
        if self.order_epoch != Some(epoch) {
            let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
            rng.set_stream(epoch);
            self.order = (0..self.data.len()).collect();
            self.order.shuffle(&mut rng);
            self.order_epoch = Some(epoch);
        }
        let bs = self.config.batch_size;
        let start = (step % per_epoch) as usize * bs;
        self.batch = self.order[start..start + bs].to_vec();
        self.noise = self.draw_noise(step, bs);
    }

    fn value(&self, theta: &Vector) -> Result<f64> {
        self.loss(theta, &self.batch, &self.noise)
    }

    fn gradient(&self, theta: &Vector) -> Result<Vector> {
        self.loss_and_grad(theta, &self.batch, &self.noise).map(|(_, g)| g)
    }
}
