//! Squeeze-excitation channel gate.

use super::act::{self, Activation};
use super::conv::Conv2d;
use super::pool::global_avg_pool;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Global pool → 1×1 reduce (bias) → swish → 1×1 expand (bias) → sigmoid →
/// channelwise scale. The reduced width is `max(1, round(se_ratio ·
/// block_input_channels))`, decided by the caller.
#[derive(Debug, Clone)]
pub struct SqueezeExcite<T> {
    pub reduce: Conv2d<T>,
    pub expand: Conv2d<T>,
    cache: Option<SeCache<T>>,
}

#[derive(Debug, Clone)]
struct SeCache<T> {
    x: Tensor<T>,
    pre_swish: Tensor<T>,
    pre_sigmoid: Tensor<T>,
    gate: Tensor<T>,
}

impl<T: Scalar> SqueezeExcite<T> {
    pub fn new(channels: usize, reduced: usize, rng: &mut impl Rng) -> Self {
        SqueezeExcite {
            reduce: Conv2d::new(channels, reduced, 1, 1, 0, 1, true, rng),
            expand: Conv2d::new(reduced, channels, 1, 1, 0, 1, true, rng),
            cache: None,
        }
    }

    fn gate(&self, x: &Tensor<T>) -> (Tensor<T>, Tensor<T>, Tensor<T>) {
        let (n, c, _, _) = x.nchw();
        let pooled = global_avg_pool(x).reshape(&[n, c, 1, 1]);
        let pre_swish = self.reduce.infer(&pooled);
        let mid = pre_swish.clone().map(|v| act::apply(Activation::Swish, v));
        let pre_sigmoid = self.expand.infer(&mid);
        let gate = pre_sigmoid.clone().map(act::sigmoid);
        (pre_swish, pre_sigmoid, gate)
    }

    fn scale(x: &Tensor<T>, gate: &Tensor<T>) -> Tensor<T> {
        let (n, c, _, _) = x.nchw();
        let mut y = x.clone();
        for ni in 0..n {
            for ci in 0..c {
                let g = gate.data()[ni * c + ci];
                for v in y.plane_mut(ni, ci) {
                    *v *= g;
                }
            }
        }
        y
    }

    pub fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        let (_, _, gate) = self.gate(x);
        Self::scale(x, &gate)
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let (pre_swish, pre_sigmoid, gate) = self.gate(x);
        let y = Self::scale(x, &gate);
        self.cache = Some(SeCache { x: x.clone(), pre_swish, pre_sigmoid, gate });
        y
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let SeCache { x, pre_swish, pre_sigmoid, gate } =
            self.cache.take().expect("squeeze-excite backward without forward_train");
        let (n, c, h, w) = x.nchw();
        let hw = T::from_f((h * w) as f64);

        // direct path dx = dy ⊙ gate; gate path dgate[n,c] = Σ_hw dy ⊙ x
        let mut dx = dy.clone();
        let mut dgate = Tensor::zeros(&[n, c, 1, 1]);
        for ni in 0..n {
            for ci in 0..c {
                let g = gate.data()[ni * c + ci];
                let mut acc = T::zero();
                for (dv, &xv) in dx.plane_mut(ni, ci).iter_mut().zip(x.plane(ni, ci)) {
                    acc += *dv * xv;
                    *dv *= g;
                }
                dgate.data_mut()[ni * c + ci] = acc;
            }
        }

        // back through sigmoid
        for (dv, &pre) in dgate.data_mut().iter_mut().zip(pre_sigmoid.data()) {
            *dv *= act::derivative(Activation::Sigmoid, pre);
        }
        // back through expand conv (cache the swish output it consumed)
        self.expand.cache_mid(pre_swish.clone().map(|v| act::apply(Activation::Swish, v)));
        let mut dmid = self.expand.backward(&dgate);
        for (dv, &pre) in dmid.data_mut().iter_mut().zip(pre_swish.data()) {
            *dv *= act::derivative(Activation::Swish, pre);
        }
        self.reduce.cache_mid(global_avg_pool(&x).reshape(&[n, c, 1, 1]));
        let dpool = self.reduce.backward(&dmid);

        // spread pooled gradient uniformly over the spatial extent
        for ni in 0..n {
            for ci in 0..c {
                let g = dpool.data()[ni * c + ci] / hw;
                for v in dx.plane_mut(ni, ci) {
                    *v += g;
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

    fn se_with_bias(bias: f64) -> SqueezeExcite<f64> {
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let mut se = SqueezeExcite::new(4, 2, &mut rng);
        se.expand.weight.value.fill(0.0);
        if let Some(b) = &mut se.expand.bias {
            b.value.fill(bias);
        }
        se
    }

    #[test]
    fn saturated_open_gate_passes_input_through() {
        let se = se_with_bias(40.0);
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let x = Tensor::rand_uniform(&[2, 4, 3, 3], -1.0, 1.0, &mut rng);
        let y = se.infer(&x);
        for (a, b) in y.data().iter().zip(x.data()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn saturated_closed_gate_zeroes_output() {
        let se = se_with_bias(-40.0);
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let x = Tensor::rand_uniform(&[2, 4, 3, 3], -1.0, 1.0, &mut rng);
        let y = se.infer(&x);
        assert!(y.data().iter().all(|&v| v.abs() < 1e-12));
    }
}
