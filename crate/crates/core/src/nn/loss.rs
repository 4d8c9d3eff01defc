//! Softmax cross-entropy with log-sum-exp stabilization.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Mean cross-entropy over the batch plus dL/dlogits.
///
/// `logits` is N×K, `labels` holds class indices below K. The gradient is
/// `(softmax − onehot) / N`.
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> (T, Tensor<T>) {
    let n = logits.dims()[0];
    let k = logits.dims()[1];
    assert_eq!(labels.len(), n, "label count mismatch");
    let mut grad = Tensor::zeros(logits.dims());
    let inv_n = T::from_f(1.0 / n as f64);
    let mut loss = T::zero();
    for ni in 0..n {
        let row = &logits.data()[ni * k..(ni + 1) * k];
        let label = labels[ni];
        assert!(label < k, "label {label} out of range for {k} classes");
        let mut mx = row[0];
        for &v in row {
            mx = mx.max(v);
        }
        let mut denom = T::zero();
        for &v in row {
            denom += (v - mx).exp();
        }
        let log_denom = denom.ln();
        loss += log_denom - (row[label] - mx);
        let grow = &mut grad.data_mut()[ni * k..(ni + 1) * k];
        for (j, g) in grow.iter_mut().enumerate() {
            let p = (row[j] - mx).exp() / denom;
            *g = (p - if j == label { T::one() } else { T::zero() }) * inv_n;
        }
    }
    (loss * inv_n, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_cost_ln_k() {
        for k in [2usize, 4, 10] {
            let logits = Tensor::full(&[3, k], 0.7f64);
            let (loss, _) = softmax_cross_entropy(&logits, &[0, k - 1, k / 2]);
            assert!((loss - (k as f64).ln()).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn loss_is_nonnegative_and_grad_sums_to_zero() {
        let logits = Tensor::from_vec(&[2, 3], vec![1.0f64, -2.0, 0.3, 4.0, 0.0, -1.0]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[2, 0]);
        assert!(loss >= 0.0);
        for ni in 0..2 {
            let s: f64 = grad.data()[ni * 3..(ni + 1) * 3].iter().sum();
            assert!(s.abs() < 1e-12);
        }
    }
}
