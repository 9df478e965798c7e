use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exp: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum: T = exp.iter().copied().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

/// Mean squared error and its gradient `2 (prediction - target) / n`.
pub fn mse_loss<T: Scalar>(prediction: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    if prediction.len() != target.len() || prediction.is_empty() {
        return Err(Error::Shape(format!(
            "mse over {} predictions and {} targets",
            prediction.len(),
            target.len()
        )));
    }
    let n = T::of(prediction.len() as f64);
    let two = T::of(2.0);
    let mut loss = T::zero();
    let grad = prediction
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += d * d;
            two * d / n
        })
        .collect();
    Ok((loss / n, grad))
}

/// `-ln p[target]` and the gradient with respect to the logits, `p - onehot`.
pub fn cross_entropy_loss<T: Scalar>(probabilities: &[T], target: usize) -> Result<(T, Vec<T>)> {
    let p = *probabilities.get(target).ok_or(Error::Index {
        index: target,
        len: probabilities.len(),
    })?;
    let loss = -p.max(T::min_positive_value()).ln();
    let mut grad = probabilities.to_vec();
    grad[target] -= T::one();
    Ok((loss, grad))
}

/// Mean MSE over every entry of a batch.
pub fn mse_batch<T: Scalar>(prediction: &Matrix<T>, target: &Matrix<T>) -> Result<(T, Matrix<T>)> {
    if prediction.rows() != target.rows() || prediction.cols() != target.cols() {
        return Err(Error::Shape(format!(
            "mse over {}x{} and {}x{}",
            prediction.rows(),
            prediction.cols(),
            target.rows(),
            target.cols()
        )));
    }
    let (loss, grad) = mse_loss(prediction.as_slice(), target.as_slice())?;
    Ok((loss, Matrix::from_vec(prediction.rows(), prediction.cols(), grad)?))
}

/// Mean cross-entropy over a batch of softmax rows.
pub fn cross_entropy_batch<T: Scalar>(probabilities: &Matrix<T>, targets: &[usize]) -> Result<(T, Matrix<T>)> {
    if probabilities.rows() != targets.len() || targets.is_empty() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} targets",
            probabilities.rows(),
            targets.len()
        )));
    }
    let n = T::of(targets.len() as f64);
    let mut grad = Matrix::zeros(probabilities.rows(), probabilities.cols());
    let mut loss = T::zero();
    for (i, &t) in targets.iter().enumerate() {
        let (l, g) = cross_entropy_loss(probabilities.row(i), t)?;
        loss += l;
        for (dst, v) in grad.row_mut(i).iter_mut().zip(g) {
            *dst = v / n;
        }
    }
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_is_a_distribution_and_shift_invariant() {
        let z = [1.0, -2.0, 0.5, 30.0, -700.0];
        let p = softmax(&z);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.iter().all(|&v| v >= 0.0));
        let shifted: Vec<f64> = z.iter().map(|v| v + 123.25).collect();
        for (a, b) in p.iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mse_examples() {
        let (l, g) = mse_loss(&[0.3, -1.0], &[0.3, -1.0]).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, vec![0.0, 0.0]);
        let (l, g) = mse_loss(&[1.0, 0.0], &[0.0, 0.0]).unwrap();
        assert_eq!(l, 0.5);
        assert_eq!(g, vec![1.0, 0.0]);
        assert!(mse_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn mse_matches_direct_sum() {
        let p = [0.25, -3.5, 7.0, 1.125];
        let t = [1.0, 2.0, -1.0, 0.0];
        let mut direct: f64 = 0.0;
        for i in 0..4 {
            direct += (p[i] - t[i]) * (p[i] - t[i]);
        }
        direct /= 4.0;
        assert!((mse_loss(&p, &t).unwrap().0 - direct).abs() < 1e-15);
    }

    #[test]
    fn cross_entropy_examples() {
        let (l, g) = cross_entropy_loss(&[0.0, 1.0, 0.0], 1).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
        let uniform = vec![1.0 / 324.0; 324];
        let (l, _) = cross_entropy_loss(&uniform, 17).unwrap();
        assert!((l - 324f64.ln()).abs() < 1e-12);
        assert!((l - 5.7807).abs() < 1e-4);
        assert!(matches!(cross_entropy_loss(&uniform, 324), Err(Error::Index { .. })));
    }

    // d/dz of -ln softmax(z)[t] against central differences.
    #[test]
    fn cross_entropy_logit_gradient_matches_finite_differences() {
        let z = [0.3, -1.2, 2.0, 0.7];
        let t = 2;
        let f = |z: &[f64]| -softmax(z)[t].ln();
        let (_, g) = cross_entropy_loss(&softmax(&z), t).unwrap();
        let h = 1e-5;
        for i in 0..z.len() {
            let mut up = z;
            let mut dn = z;
            up[i] += h;
            dn[i] -= h;
            let fd = (f(&up) - f(&dn)) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-8, "{i}: {fd} vs {}", g[i]);
        }
    }
}
