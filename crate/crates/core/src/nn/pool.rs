//! Global average pooling and the fully-connected classifier head.

use super::param::Parameter;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Mean over the spatial extent: NCHW → N×C.
pub fn global_avg_pool<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (n, c, h, w) = x.nchw();
    let inv = T::from_f(1.0 / (h * w) as f64);
    let mut y = Tensor::zeros(&[n, c]);
    for ni in 0..n {
        for ci in 0..c {
            let mut acc = T::zero();
            for &v in x.plane(ni, ci) {
                acc += v;
            }
            y.data_mut()[ni * c + ci] = acc * inv;
        }
    }
    y
}

#[derive(Debug, Clone)]
pub struct GlobalAvgPool<T> {
    in_dims: Option<Vec<usize>>,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Scalar> Default for GlobalAvgPool<T> {
    fn default() -> Self {
        GlobalAvgPool { in_dims: None, _marker: std::marker::PhantomData }
    }
}

impl<T: Scalar> GlobalAvgPool<T> {
    pub fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        global_avg_pool(x)
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        self.in_dims = Some(x.dims().to_vec());
        global_avg_pool(x)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let dims = self.in_dims.take().expect("pool backward without forward_train");
        let (n, c, h, w) = (dims[0], dims[1], dims[2], dims[3]);
        let inv = T::from_f(1.0 / (h * w) as f64);
        let mut dx = Tensor::zeros(&dims);
        for ni in 0..n {
            for ci in 0..c {
                let g = dy.data()[ni * c + ci] * inv;
                dx.plane_mut(ni, ci).fill(g);
            }
        }
        dx
    }
}

/// Dense layer y = xWᵀ + b over N×in inputs.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub weight: Parameter<T>, // [out, in]
    pub bias: Parameter<T>,   // [out]
    cache_x: Option<Tensor<T>>,
}

impl<T: Scalar> Linear<T> {
    /// Uniform ±1/sqrt(fan_in) init for weight and bias.
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut impl Rng) -> Self {
        let bound = T::from_f(1.0 / (fan_in as f64).sqrt());
        Linear {
            weight: Parameter::new(Tensor::rand_uniform(&[fan_out, fan_in], -bound, bound, rng)),
            bias: Parameter::new(Tensor::rand_uniform(&[fan_out], -bound, bound, rng)),
            cache_x: None,
        }
    }

    pub fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        let n = x.dims()[0];
        let fin = x.dims()[1];
        let fout = self.weight.value.dims()[0];
        assert_eq!(fin, self.weight.value.dims()[1], "linear input width mismatch");
        let mut y = Tensor::zeros(&[n, fout]);
        for ni in 0..n {
            let xr = &x.data()[ni * fin..(ni + 1) * fin];
            let yr = &mut y.data_mut()[ni * fout..(ni + 1) * fout];
            for (o, yo) in yr.iter_mut().enumerate() {
                let wr = &self.weight.value.data()[o * fin..(o + 1) * fin];
                let mut acc = self.bias.value.data()[o];
                for (a, b) in xr.iter().zip(wr) {
                    acc += *a * *b;
                }
                *yo = acc;
            }
        }
        y
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let y = self.infer(x);
        self.cache_x = Some(x.clone());
        y
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let x = self.cache_x.take().expect("linear backward without forward_train");
        let n = x.dims()[0];
        let fin = x.dims()[1];
        let fout = self.weight.value.dims()[0];
        let mut dx = Tensor::zeros(x.dims());
        for ni in 0..n {
            let xr = &x.data()[ni * fin..(ni + 1) * fin];
            let dyr = &dy.data()[ni * fout..(ni + 1) * fout];
            for (o, &g) in dyr.iter().enumerate() {
                self.bias.grad.data_mut()[o] += g;
                let wgr = &mut self.weight.grad.data_mut()[o * fin..(o + 1) * fin];
                for (wg, &xv) in wgr.iter_mut().zip(xr) {
                    *wg += g * xv;
                }
            }
            let dxr = &mut dx.data_mut()[ni * fin..(ni + 1) * fin];
            for (o, &g) in dyr.iter().enumerate() {
                let wr = &self.weight.value.data()[o * fin..(o + 1) * fin];
                for (dv, &wv) in dxr.iter_mut().zip(wr) {
                    *dv += g * wv;
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_of_constant_tensor_returns_the_constant() {
        let x = Tensor::full(&[2, 3, 4, 4], 2.5f64);
        let y = global_avg_pool(&x);
        assert_eq!(y.dims(), &[2, 3]);
        assert!(y.data().iter().all(|&v| (v - 2.5).abs() < 1e-12));
    }
}
