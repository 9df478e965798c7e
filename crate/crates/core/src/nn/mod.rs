//! Dense network with batch-norm, ReLU hidden layers and a softmax head,
//! written against [`Scalar`] so it runs in `f32` or `f64`.
//!
//! Hidden layers compute `relu(bn(W x + b))`; the head computes `W x + b`
//! (the logits) followed by a softmax. Batch-norm uses batch statistics in
//! training mode when the batch has more than one row, and running
//! statistics otherwise.

mod adam;
mod checkpoint;
mod gradcheck;
mod loss;
mod matrix;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta};
pub use gradcheck::{check_gradients, GradCheck, LossHead};
pub use loss::{cross_entropy_batch, cross_entropy_loss, mse_batch, mse_loss, softmax};
pub use matrix::Matrix;

use matrix::{axpy, dot};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Input (81 board cells + objective), two hidden layers, one output per action.
pub const ARCH: [usize; 4] = [82, 100, 200, 324];

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T> {
    pub gain: Vec<T>,
    pub shift: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub eps: T,
}

impl<T: Scalar> BatchNorm<T> {
    fn identity(n: usize) -> Self {
        BatchNorm {
            gain: vec![T::one(); n],
            shift: vec![T::zero(); n],
            running_mean: vec![T::zero(); n],
            running_var: vec![T::one(); n],
            eps: T::of(BN_EPS),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer<T> {
    pub inputs: usize,
    pub outputs: usize,
    /// `outputs x inputs`, row-major.
    pub weights: Vec<T>,
    pub biases: Vec<T>,
    pub bn: Option<BatchNorm<T>>,
}

impl<T: Scalar> DenseLayer<T> {
    fn slices(&self) -> Vec<&[T]> {
        let mut v: Vec<&[T]> = vec![&self.weights, &self.biases];
        if let Some(bn) = &self.bn {
            v.push(&bn.gain);
            v.push(&bn.shift);
        }
        v
    }

    fn slices_mut(&mut self) -> Vec<&mut [T]> {
        let mut v: Vec<&mut [T]> = vec![&mut self.weights, &mut self.biases];
        if let Some(bn) = &mut self.bn {
            v.push(&mut bn.gain);
            v.push(&mut bn.shift);
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network<T> {
    layers: Vec<DenseLayer<T>>,
}

/// Per-layer intermediates kept for the backward pass.
#[derive(Clone, Debug)]
struct LayerCache<T> {
    input: Matrix<T>,
    /// Normalized pre-activations (batch-norm layers only).
    xhat: Option<Matrix<T>>,
    inv_std: Vec<T>,
    batch_stats: bool,
    /// Post-norm pre-activations; the ReLU mask is `y > 0`.
    pre_relu: Option<Matrix<T>>,
    /// Batch mean and biased variance, when batch statistics were used.
    stats: Option<(Vec<T>, Vec<T>)>,
}

#[derive(Clone, Debug)]
pub struct Cache<T> {
    mode: Mode,
    layers: Vec<LayerCache<T>>,
}

impl<T> Cache<T> {
    pub fn mode(&self) -> Mode {
        self.mode
    }
}

#[derive(Clone, Debug)]
pub struct ForwardPass<T> {
    pub logits: Matrix<T>,
    pub probabilities: Matrix<T>,
    pub cache: Cache<T>,
}

/// Gradients shaped like the network's trainable parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub layers: Vec<LayerGradients<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerGradients<T> {
    pub weights: Vec<T>,
    pub biases: Vec<T>,
    pub gain: Option<Vec<T>>,
    pub shift: Option<Vec<T>>,
}

impl<T: Scalar> Gradients<T> {
    /// Same order as the network's parameter slices.
    pub fn slices(&self) -> Vec<&[T]> {
        let mut v = Vec::new();
        for l in &self.layers {
            v.push(l.weights.as_slice());
            v.push(l.biases.as_slice());
            if let (Some(g), Some(s)) = (&l.gain, &l.shift) {
                v.push(g.as_slice());
                v.push(s.as_slice());
            }
        }
        v
    }

    pub fn flat(&self) -> Vec<T> {
        self.slices().concat()
    }

    pub fn is_zero(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|v| v.is_zero()))
    }
}

impl<T: Scalar> Network<T> {
    /// Weights and biases drawn uniformly from `±1/sqrt(fan_in)`. Every layer
    /// but the last gets batch-norm and a ReLU.
    pub fn new<R: Rng + ?Sized>(arch: &[usize], rng: &mut R) -> Result<Self> {
        if arch.len() < 2 || arch.contains(&0) {
            return Err(Error::Shape(format!("invalid architecture {arch:?}")));
        }
        let n_layers = arch.len() - 1;
        let layers = (0..n_layers)
            .map(|i| {
                let (fan_in, fan_out) = (arch[i], arch[i + 1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let mut draw = || T::of(rng.gen_range(-bound..bound));
                let weights = (0..fan_in * fan_out).map(|_| draw()).collect();
                let biases = (0..fan_out).map(|_| draw()).collect();
                DenseLayer {
                    inputs: fan_in,
                    outputs: fan_out,
                    weights,
                    biases,
                    bn: (i + 1 < n_layers).then(|| BatchNorm::identity(fan_out)),
                }
            })
            .collect();
        Ok(Network { layers })
    }

    /// The 82-100-200-324 action-value network.
    pub fn jellygym<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::new(&ARCH, rng).expect("fixed architecture is valid")
    }

    /// Same shape with every weight, bias and batch-norm shift at zero.
    pub fn zeroed(arch: &[usize]) -> Result<Self> {
        let mut net = Self::new(arch, &mut crate::rng::seeded(0))?;
        for layer in &mut net.layers {
            for s in layer.slices_mut() {
                s.fill(T::zero());
            }
            if let Some(bn) = &mut layer.bn {
                bn.gain.fill(T::one());
            }
        }
        Ok(net)
    }

    pub(crate) fn from_layers(layers: Vec<DenseLayer<T>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network without layers".into()));
        }
        for w in layers.windows(2) {
            if w[0].outputs != w[1].inputs {
                return Err(Error::Shape(format!(
                    "layer output {} feeds input {}",
                    w[0].outputs, w[1].inputs
                )));
            }
        }
        Ok(Network { layers })
    }

    pub fn arch(&self) -> Vec<usize> {
        let mut a = vec![self.layers[0].inputs];
        a.extend(self.layers.iter().map(|l| l.outputs));
        a
    }

    pub fn layers(&self) -> &[DenseLayer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [DenseLayer<T>] {
        &mut self.layers
    }

    pub fn input_size(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_size(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn param_slices(&self) -> Vec<&[T]> {
        self.layers.iter().flat_map(|l| l.slices()).collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [T]> {
        self.layers.iter_mut().flat_map(|l| l.slices_mut()).collect()
    }

    pub fn param_count(&self) -> usize {
        self.param_slices().iter().map(|s| s.len()).sum()
    }

    /// Parameter by flat index, in [`Network::param_slices`] order.
    pub fn param(&self, mut index: usize) -> T {
        for s in self.param_slices() {
            if index < s.len() {
                return s[index];
            }
            index -= s.len();
        }
        panic!("parameter index out of range");
    }

    pub fn set_param(&mut self, mut index: usize, value: T) {
        for s in self.param_slices_mut() {
            if index < s.len() {
                s[index] = value;
                return;
            }
            index -= s.len();
        }
        panic!("parameter index out of range");
    }

    /// Forward pass without touching running statistics.
    pub fn evaluate(&self, input: &Matrix<T>, mode: Mode) -> Result<ForwardPass<T>> {
        if input.cols() != self.input_size() || input.rows() == 0 {
            return Err(Error::Shape(format!(
                "input is {}x{}, network expects {} features",
                input.rows(),
                input.cols(),
                self.input_size()
            )));
        }
        let batch = input.rows();
        let use_batch_stats = mode == Mode::Train && batch > 1;
        let last = self.layers.len() - 1;
        let mut x = input.clone();
        let mut caches = Vec::with_capacity(self.layers.len());

        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Matrix::zeros(batch, layer.outputs);
            for b in 0..batch {
                let xb = x.row(b);
                let zb = z.row_mut(b);
                for (j, zj) in zb.iter_mut().enumerate() {
                    let w = &layer.weights[j * layer.inputs..(j + 1) * layer.inputs];
                    *zj = dot(w, xb) + layer.biases[j];
                }
            }

            let mut cache = LayerCache {
                input: x,
                xhat: None,
                inv_std: Vec::new(),
                batch_stats: use_batch_stats,
                pre_relu: None,
                stats: None,
            };

            if let Some(bn) = &layer.bn {
                let (mean, var) = if use_batch_stats {
                    let n = T::of(batch as f64);
                    let mut mean = vec![T::zero(); layer.outputs];
                    for row in z.iter_rows() {
                        axpy(T::one(), row, &mut mean);
                    }
                    mean.iter_mut().for_each(|m| *m /= n);
                    let mut var = vec![T::zero(); layer.outputs];
                    for row in z.iter_rows() {
                        for ((v, &zj), &mj) in var.iter_mut().zip(row).zip(&mean) {
                            *v += (zj - mj) * (zj - mj);
                        }
                    }
                    var.iter_mut().for_each(|v| *v /= n);
                    (mean, var)
                } else {
                    (bn.running_mean.clone(), bn.running_var.clone())
                };
                let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + bn.eps).sqrt()).collect();
                let mut xhat = Matrix::zeros(batch, layer.outputs);
                for b in 0..batch {
                    let (zr, xr) = (z.row(b), xhat.row_mut(b));
                    for j in 0..layer.outputs {
                        xr[j] = (zr[j] - mean[j]) * inv_std[j];
                    }
                }
                for b in 0..batch {
                    let (xr, zr) = (xhat.row(b), z.row_mut(b));
                    for j in 0..layer.outputs {
                        zr[j] = bn.gain[j] * xr[j] + bn.shift[j];
                    }
                }
                cache.inv_std = inv_std;
                cache.xhat = Some(xhat);
                if use_batch_stats {
                    cache.stats = Some((mean, var));
                }
            }

            if li < last {
                cache.pre_relu = Some(z.clone());
                z.as_mut_slice().iter_mut().for_each(|v| *v = v.max(T::zero()));
            }
            caches.push(cache);
            x = z;
        }

        let mut probabilities = Matrix::zeros(batch, x.cols());
        for b in 0..batch {
            probabilities.row_mut(b).copy_from_slice(&softmax(x.row(b)));
        }
        Ok(ForwardPass {
            logits: x,
            probabilities,
            cache: Cache { mode, layers: caches },
        })
    }

    /// Forward pass; in training mode with batch statistics the running
    /// mean and variance are updated.
    pub fn forward_batch(&mut self, input: &Matrix<T>, mode: Mode) -> Result<ForwardPass<T>> {
        let pass = self.evaluate(input, mode)?;
        let momentum = T::of(BN_MOMENTUM);
        let batch = input.rows();
        for (layer, cache) in self.layers.iter_mut().zip(&pass.cache.layers) {
            if let (Some(bn), Some((mean, var))) = (&mut layer.bn, &cache.stats) {
                let unbias = T::of(batch as f64 / (batch as f64 - 1.0));
                for j in 0..layer.outputs {
                    bn.running_mean[j] = (T::one() - momentum) * bn.running_mean[j] + momentum * mean[j];
                    bn.running_var[j] = (T::one() - momentum) * bn.running_var[j] + momentum * var[j] * unbias;
                }
            }
        }
        Ok(pass)
    }

    /// Single-sample forward pass.
    pub fn forward(&mut self, input: &[T], mode: Mode) -> Result<ForwardPass<T>> {
        self.forward_batch(&Matrix::from_vec(1, input.len(), input.to_vec())?, mode)
    }

    /// Inference-mode logits for one input.
    pub fn predict(&self, input: &[T]) -> Result<Vec<T>> {
        let pass = self.evaluate(&Matrix::from_vec(1, input.len(), input.to_vec())?, Mode::Infer)?;
        Ok(pass.logits.row(0).to_vec())
    }

    /// Inference-mode softmax probabilities for one input.
    pub fn predict_probabilities(&self, input: &[T]) -> Result<Vec<T>> {
        let pass = self.evaluate(&Matrix::from_vec(1, input.len(), input.to_vec())?, Mode::Infer)?;
        Ok(pass.probabilities.row(0).to_vec())
    }

    /// Gradients of the loss given its gradient with respect to the logits
    /// (`batch x outputs`, already averaged over the batch).
    pub fn backward(&self, cache: &Cache<T>, loss_grad: &Matrix<T>) -> Result<Gradients<T>> {
        if cache.mode != Mode::Train {
            return Err(Error::Mode("backward needs a training-mode cache".into()));
        }
        if cache.layers.len() != self.layers.len() {
            return Err(Error::Shape("cache does not belong to this network".into()));
        }
        let batch = cache.layers[0].input.rows();
        if loss_grad.rows() != batch || loss_grad.cols() != self.output_size() {
            return Err(Error::Shape(format!(
                "loss gradient is {}x{}, expected {}x{}",
                loss_grad.rows(),
                loss_grad.cols(),
                batch,
                self.output_size()
            )));
        }

        let mut grads: Vec<LayerGradients<T>> = Vec::with_capacity(self.layers.len());
        let mut upstream = loss_grad.clone();
        for (layer, lc) in self.layers.iter().zip(&cache.layers).rev() {
            let mut d = upstream;
            if let Some(pre) = &lc.pre_relu {
                for (g, &y) in d.as_mut_slice().iter_mut().zip(pre.as_slice()) {
                    if y <= T::zero() {
                        *g = T::zero();
                    }
                }
            }

            let (mut gain_g, mut shift_g) = (None, None);
            if let (Some(bn), Some(xhat)) = (&layer.bn, &lc.xhat) {
                let mut dgain = vec![T::zero(); layer.outputs];
                let mut dshift = vec![T::zero(); layer.outputs];
                for b in 0..batch {
                    let (dr, xr) = (d.row(b), xhat.row(b));
                    for j in 0..layer.outputs {
                        dgain[j] += dr[j] * xr[j];
                        dshift[j] += dr[j];
                    }
                }
                // d/dxhat = d * gain
                for b in 0..batch {
                    let dr = d.row_mut(b);
                    for j in 0..layer.outputs {
                        dr[j] *= bn.gain[j];
                    }
                }
                if lc.batch_stats {
                    let n = T::of(batch as f64);
                    let mut sum_dx = vec![T::zero(); layer.outputs];
                    let mut sum_dx_xhat = vec![T::zero(); layer.outputs];
                    for b in 0..batch {
                        let (dr, xr) = (d.row(b), xhat.row(b));
                        for j in 0..layer.outputs {
                            sum_dx[j] += dr[j];
                            sum_dx_xhat[j] += dr[j] * xr[j];
                        }
                    }
                    for b in 0..batch {
                        let xr = xhat.row(b).to_vec();
                        let dr = d.row_mut(b);
                        for j in 0..layer.outputs {
                            dr[j] = lc.inv_std[j] / n * (n * dr[j] - sum_dx[j] - xr[j] * sum_dx_xhat[j]);
                        }
                    }
                } else {
                    for b in 0..batch {
                        let dr = d.row_mut(b);
                        for j in 0..layer.outputs {
                            dr[j] *= lc.inv_std[j];
                        }
                    }
                }
                gain_g = Some(dgain);
                shift_g = Some(dshift);
            }

            let mut dw = vec![T::zero(); layer.outputs * layer.inputs];
            let mut db = vec![T::zero(); layer.outputs];
            let mut dx = Matrix::zeros(batch, layer.inputs);
            for b in 0..batch {
                let (dr, xr) = (d.row(b), lc.input.row(b));
                for j in 0..layer.outputs {
                    let g = dr[j];
                    if g.is_zero() {
                        continue;
                    }
                    db[j] += g;
                    axpy(g, xr, &mut dw[j * layer.inputs..(j + 1) * layer.inputs]);
                    axpy(
                        g,
                        &layer.weights[j * layer.inputs..(j + 1) * layer.inputs],
                        dx.row_mut(b),
                    );
                }
            }
            grads.push(LayerGradients {
                weights: dw,
                biases: db,
                gain: gain_g,
                shift: shift_g,
            });
            upstream = dx;
        }
        grads.reverse();
        Ok(Gradients { layers: grads })
    }
}

/// Copies every parameter and running statistic of `source` into `destination`.
pub fn clone_weights<T: Scalar>(source: &Network<T>, destination: &mut Network<T>) -> Result<()> {
    if source.arch() != destination.arch() {
        return Err(Error::Shape(format!(
            "cannot copy {:?} into {:?}",
            source.arch(),
            destination.arch()
        )));
    }
    destination.layers.clone_from(&source.layers);
    Ok(())
}
