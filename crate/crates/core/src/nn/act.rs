//! Elementwise activations: relu, sigmoid, swish.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Swish,
}

pub fn sigmoid<T: Scalar>(v: T) -> T {
    T::one() / (T::one() + (-v).exp())
}

pub fn apply<T: Scalar>(act: Activation, v: T) -> T {
    match act {
        Activation::Relu => v.max(T::zero()),
        Activation::Sigmoid => sigmoid(v),
        Activation::Swish => v * sigmoid(v),
    }
}

/// d(act)/dx at pre-activation x.
pub fn derivative<T: Scalar>(act: Activation, x: T) -> T {
    match act {
        Activation::Relu => {
            if x > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        }
        Activation::Sigmoid => {
            let s = sigmoid(x);
            s * (T::one() - s)
        }
        Activation::Swish => {
            // d/dx x·σ(x) = σ(x)(1 + x(1 − σ(x)))
            let s = sigmoid(x);
            s * (T::one() + x * (T::one() - s))
        }
    }
}

/// Activation as a layer, caching the pre-activation input for backward.
#[derive(Debug, Clone)]
pub struct ActLayer<T> {
    pub act: Activation,
    cache_x: Option<Tensor<T>>,
}

impl<T: Scalar> ActLayer<T> {
    pub fn new(act: Activation) -> Self {
        ActLayer { act, cache_x: None }
    }

    pub fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        x.clone().map(|v| apply(self.act, v))
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let y = self.infer(x);
        self.cache_x = Some(x.clone());
        y
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let x = self.cache_x.take().expect("activation backward without forward_train");
        let mut dx = x;
        for (dv, &g) in dx.data_mut().iter_mut().zip(dy.data()) {
            *dv = g * derivative(self.act, *dv);
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pointwise_values() {
        assert_eq!(apply(Activation::Swish, 0.0f64), 0.0);
        assert_eq!(apply(Activation::Relu, -1.0f64), 0.0);
        assert_eq!(apply(Activation::Relu, 2.0f64), 2.0);
        assert!((apply(Activation::Sigmoid, 0.0f64) - 0.5).abs() < 1e-15);
    }
}
