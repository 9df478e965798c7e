use super::{Gradients, Network};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LEARNING_RATE: f64 = 0.001;
pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// Adam moments, one vector per parameter slice of the network it was built for.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T> {
    pub first_moment: Vec<Vec<T>>,
    pub second_moment: Vec<Vec<T>>,
    pub step_count: u64,
    pub alpha: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(net: &Network<T>) -> Self {
        Self::with_rate(net, T::of(LEARNING_RATE))
    }

    pub fn with_rate(net: &Network<T>, alpha: T) -> Self {
        let zeros: Vec<Vec<T>> = net.param_slices().iter().map(|s| vec![T::zero(); s.len()]).collect();
        AdamState {
            first_moment: zeros.clone(),
            second_moment: zeros,
            step_count: 0,
            alpha,
            beta1: T::of(BETA1),
            beta2: T::of(BETA2),
            epsilon: T::of(EPSILON),
        }
    }

    fn shapes(&self) -> Vec<usize> {
        self.first_moment.iter().map(Vec::len).collect()
    }

    /// Bias-corrected update of every parameter slice.
    pub fn step(&mut self, net: &mut Network<T>, grads: &Gradients<T>) -> Result<()> {
        let g_slices = grads.slices();
        let shapes = self.shapes();
        let g_shapes: Vec<usize> = g_slices.iter().map(|s| s.len()).collect();
        let p_shapes: Vec<usize> = net.param_slices().iter().map(|s| s.len()).collect();
        if shapes != g_shapes
            || shapes != p_shapes
            || self.second_moment.iter().map(Vec::len).ne(shapes.iter().copied())
        {
            return Err(Error::Shape(
                "optimizer, gradients and network disagree in shape".into(),
            ));
        }
        self.step_count += 1;
        let t = self.step_count.min(i32::MAX as u64) as i32;
        let one = T::one();
        let c1 = one - self.beta1.powi(t);
        let c2 = one - self.beta2.powi(t);
        let (b1, b2, alpha, eps) = (self.beta1, self.beta2, self.alpha, self.epsilon);
        for (((params, g), m), v) in net
            .param_slices_mut()
            .into_iter()
            .zip(g_slices)
            .zip(&mut self.first_moment)
            .zip(&mut self.second_moment)
        {
            for i in 0..params.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                params[i] -= alpha * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// One Adam update of `net` with `grads`.
pub fn adam_step<T: Scalar>(net: &mut Network<T>, grads: &Gradients<T>, opt: &mut AdamState<T>) -> Result<()> {
    opt.step(net, grads)
}
