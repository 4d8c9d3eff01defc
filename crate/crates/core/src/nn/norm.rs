//! Batch normalization over NCHW channels.

use super::param::Parameter;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Per-channel batch norm. Train mode normalizes by batch statistics and
/// blends them into the running estimates (torch convention:
/// `running = (1 - momentum)·running + momentum·batch`, unbiased variance for
/// the running estimate); eval mode uses the running statistics.
#[derive(Debug, Clone)]
pub struct BatchNorm2d<T> {
    pub gamma: Parameter<T>,
    pub beta: Parameter<T>,
    pub running_mean: Tensor<T>,
    pub running_var: Tensor<T>,
    pub eps: T,
    pub momentum: T,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    xhat: Tensor<T>,
    inv_std: Vec<T>,
}

pub const BN_EPS_DEFAULT: f64 = 1e-3;
pub const BN_MOMENTUM_DEFAULT: f64 = 0.01;

impl<T: Scalar> BatchNorm2d<T> {
    pub fn new(channels: usize) -> Self {
        BatchNorm2d {
            gamma: Parameter::new(Tensor::full(&[channels], T::one())),
            beta: Parameter::new(Tensor::zeros(&[channels])),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], T::one()),
            eps: T::from_f(BN_EPS_DEFAULT),
            momentum: T::from_f(BN_MOMENTUM_DEFAULT),
            cache: None,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = x.nchw();
        assert_eq!(c, self.channels(), "batchnorm channel mismatch");
        let mut y = x.clone();
        for ci in 0..c {
            let inv = (self.running_var.data()[ci] + self.eps).sqrt().recip();
            let scale = self.gamma.value.data()[ci] * inv;
            let shift = self.beta.value.data()[ci] - self.running_mean.data()[ci] * scale;
            for ni in 0..n {
                for v in y.plane_mut(ni, ci) {
                    *v = *v * scale + shift;
                }
            }
        }
        let _ = (h, w);
        y
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = x.nchw();
        assert_eq!(c, self.channels(), "batchnorm channel mismatch");
        let m = n * h * w;
        let mf = T::from_f(m as f64);
        let mut y = Tensor::zeros(x.dims());
        let mut xhat = Tensor::zeros(x.dims());
        let mut inv_std = vec![T::zero(); c];
        for ci in 0..c {
            let mut sum = T::zero();
            let mut sq = T::zero();
            for ni in 0..n {
                for &v in x.plane(ni, ci) {
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / mf;
            let var = (sq / mf - mean * mean).max(T::zero());
            let inv = (var + self.eps).sqrt().recip();
            inv_std[ci] = inv;

            let unbiased = if m > 1 { var * mf / T::from_f((m - 1) as f64) } else { var };
            let keep = T::one() - self.momentum;
            self.running_mean.data_mut()[ci] =
                keep * self.running_mean.data()[ci] + self.momentum * mean;
            self.running_var.data_mut()[ci] =
                keep * self.running_var.data()[ci] + self.momentum * unbiased;

            let g = self.gamma.value.data()[ci];
            let b = self.beta.value.data()[ci];
            for ni in 0..n {
                let xp = x.plane(ni, ci);
                let hp = xhat.plane_mut(ni, ci);
                for (ho, &xv) in hp.iter_mut().zip(xp) {
                    *ho = (xv - mean) * inv;
                }
            }
            for ni in 0..n {
                let hp = xhat.plane(ni, ci);
                let yp = y.plane_mut(ni, ci);
                for (yo, &hv) in yp.iter_mut().zip(hp) {
                    *yo = hv * g + b;
                }
            }
        }
        self.cache = Some(BnCache { xhat, inv_std });
        y
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let BnCache { xhat, inv_std } =
            self.cache.take().expect("batchnorm backward without forward_train");
        let (n, c, h, w) = dy.nchw();
        let m = T::from_f((n * h * w) as f64);
        let mut dx = Tensor::zeros(dy.dims());
        for ci in 0..c {
            let mut dg = T::zero();
            let mut db = T::zero();
            for ni in 0..n {
                let dyp = dy.plane(ni, ci);
                let hp = xhat.plane(ni, ci);
                for (dv, hv) in dyp.iter().zip(hp) {
                    dg += *dv * *hv;
                    db += *dv;
                }
            }
            self.gamma.grad.data_mut()[ci] += dg;
            self.beta.grad.data_mut()[ci] += db;

            let scale = self.gamma.value.data()[ci] * inv_std[ci];
            for ni in 0..n {
                let dyp = dy.plane(ni, ci);
                let hp = xhat.plane(ni, ci);
                let dxp = dx.plane_mut(ni, ci);
                for ((dxo, &dv), &hv) in dxp.iter_mut().zip(dyp).zip(hp) {
                    *dxo = scale * (dv - db / m - hv * dg / m);
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn eval_with_identity_stats_is_nearly_identity() {
        let bn = BatchNorm2d::<f64>::new(3);
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        let x = Tensor::rand_uniform(&[2, 3, 4, 4], -2.0, 2.0, &mut rng);
        let y = bn.infer(&x);
        for (a, b) in y.data().iter().zip(x.data()) {
            // only the eps in 1/sqrt(1 + eps) separates output from input
            assert!((a - b / (1.0 + BN_EPS_DEFAULT).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn train_mode_standardizes_channels() {
        let mut bn = BatchNorm2d::<f64>::new(2);
        bn.eps = 1e-12;
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let x = Tensor::rand_uniform(&[3, 2, 5, 5], -4.0, 7.0, &mut rng);
        let y = bn.forward_train(&x);
        let m = 3.0 * 25.0;
        for ci in 0..2 {
            let mut mean = 0.0;
            let mut var = 0.0;
            for ni in 0..3 {
                for &v in y.plane(ni, ci) {
                    mean += v;
                }
            }
            mean /= m;
            for ni in 0..3 {
                for &v in y.plane(ni, ci) {
                    var += (v - mean) * (v - mean);
                }
            }
            var /= m;
            assert!(mean.abs() < 1e-4, "per-channel mean ~ 0, got {mean}");
            assert!((var - 1.0).abs() < 1e-4, "per-channel var ~ 1, got {var}");
        }
    }

    #[test]
    fn running_stats_blend_toward_batch() {
        let mut bn = BatchNorm2d::<f64>::new(1);
        bn.momentum = 0.5;
        let x = Tensor::from_vec(&[1, 1, 1, 4], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        bn.forward_train(&x);
        assert!((bn.running_mean.data()[0] - 1.25).abs() < 1e-12); // 0.5·0 + 0.5·2.5
        let unbiased = 1.25 * 4.0 / 3.0;
        assert!((bn.running_var.data()[0] - (0.5 + 0.5 * unbiased)).abs() < 1e-12);
    }
}
