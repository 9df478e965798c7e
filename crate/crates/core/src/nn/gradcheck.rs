//! Central finite differences against [`Network::backward`].

use rand::Rng;

use super::{cross_entropy_batch, mse_batch, Cache, Matrix, Mode, Network};
use crate::error::Result;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LossHead {
    Mse,
    CrossEntropy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    /// Parameters compared.
    pub checked: usize,
    /// Samples skipped because the perturbation crossed a ReLU kink.
    pub skipped: usize,
    pub max_relative_error: f64,
    /// `(parameter, analytic, numeric)` beyond tolerance.
    pub failures: Vec<(usize, f64, f64)>,
}

impl GradCheck {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn relu_pattern<T: Scalar>(cache: &Cache<T>) -> Vec<bool> {
    cache
        .layers
        .iter()
        .filter_map(|l| l.pre_relu.as_ref())
        .flat_map(|m| m.as_slice().iter().map(|&v| v > T::zero()))
        .collect()
}

fn loss<T: Scalar>(
    net: &Network<T>,
    x: &Matrix<T>,
    head: LossHead,
    target: &Matrix<T>,
    labels: &[usize],
) -> Result<(T, Matrix<T>, Cache<T>)> {
    let pass = net.evaluate(x, Mode::Train)?;
    let (l, g) = match head {
        LossHead::Mse => mse_batch(&pass.logits, target)?,
        LossHead::CrossEntropy => cross_entropy_batch(&pass.probabilities, labels)?,
    };
    Ok((l, g, pass.cache))
}

/// Compares analytic and central-difference gradients on `samples` random
/// parameters for a random target (MSE) or random labels (cross-entropy).
/// A sample passes when the absolute error is below `abs_floor` or the
/// relative error below `rel_tol`.
#[allow(clippy::too_many_arguments)]
pub fn check_gradients<R: Rng + ?Sized>(
    net: &Network<f64>,
    x: &Matrix<f64>,
    head: LossHead,
    samples: usize,
    h: f64,
    rel_tol: f64,
    abs_floor: f64,
    rng: &mut R,
) -> Result<GradCheck> {
    let out = net.output_size();
    let target = Matrix::from_vec(
        x.rows(),
        out,
        (0..x.rows() * out).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )?;
    let labels: Vec<usize> = (0..x.rows()).map(|_| rng.gen_range(0..out)).collect();
    let (_, dl, cache) = loss(net, x, head, &target, &labels)?;
    let analytic = net.backward(&cache, &dl)?.flat();

    let mut probe = net.clone();
    let mut report = GradCheck {
        checked: 0,
        skipped: 0,
        max_relative_error: 0.0,
        failures: Vec::new(),
    };
    while report.checked < samples && report.skipped < samples * 10 {
        let i = rng.gen_range(0..probe.param_count());
        let orig = probe.param(i);
        probe.set_param(i, orig + h);
        let (plus, _, plus_cache) = loss(&probe, x, head, &target, &labels)?;
        probe.set_param(i, orig - h);
        let (minus, _, minus_cache) = loss(&probe, x, head, &target, &labels)?;
        probe.set_param(i, orig);
        if relu_pattern(&plus_cache) != relu_pattern(&minus_cache) {
            report.skipped += 1;
            continue;
        }
        report.checked += 1;
        let numeric = (plus - minus) / (2.0 * h);
        let diff = (numeric - analytic[i]).abs();
        let scale = numeric.abs().max(analytic[i].abs());
        if diff > abs_floor {
            let rel = diff / scale;
            report.max_relative_error = report.max_relative_error.max(rel);
            if rel > rel_tol {
                report.failures.push((i, analytic[i], numeric));
            }
        }
    }
    Ok(report)
}
