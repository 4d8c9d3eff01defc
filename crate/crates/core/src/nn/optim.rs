//! Optimizers and the learning-rate schedule.

use super::param::Parameter;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Which update rule the optimizer runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    /// v ← m·v + g;  p ← p − lr·v
    SgdMomentum { momentum: f64 },
    /// r ← d·r + (1−d)·g²;  u ← m·u + lr·g/√(r+eps);  p ← p − u
    RmsProp { decay: f64, momentum: f64, eps: f64 },
}

/// Per-parameter accumulator state plus hyperparameters. Weight decay is an
/// L2 term added to the raw gradient before accumulation.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    pub kind: OptimizerKind,
    pub weight_decay: f64,
    slots: Vec<Slot<T>>,
}

#[derive(Debug, Clone)]
struct Slot<T> {
    acc: Tensor<T>,      // momentum buffer (sgd) / squared average (rmsprop)
    update: Tensor<T>,   // rmsprop momentum-of-update buffer
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, weight_decay: f64) -> Self {
        Optimizer { kind, weight_decay, slots: Vec::new() }
    }

    /// Apply one step at learning rate `lr` to parameters in a fixed order.
    /// Accumulator slots are allocated on first use and matched positionally,
    /// so callers must pass the same parameter sequence every step.
    pub fn step(&mut self, params: &mut [&mut Parameter<T>], lr: f64) {
        for (idx, param) in params.iter_mut().enumerate() {
            self.step_param(idx, param, lr);
        }
    }

    /// Update one parameter identified by its position in the visit order.
    pub fn step_param(&mut self, idx: usize, param: &mut Parameter<T>, lr: f64) {
        if self.slots.len() <= idx {
            debug_assert_eq!(self.slots.len(), idx, "parameters must be visited in order");
            self.slots.push(Slot {
                acc: Tensor::zeros(param.value.dims()),
                update: Tensor::zeros(param.value.dims()),
            });
        }
        if !param.trainable {
            return;
        }
        let slot = &mut self.slots[idx];
        assert_eq!(slot.acc.dims(), param.value.dims(), "parameter order changed between steps");
        let wd = T::from_f(self.weight_decay);
        let lr_t = T::from_f(lr);
        match self.kind {
            OptimizerKind::SgdMomentum { momentum } => {
                let m = T::from_f(momentum);
                for i in 0..param.len() {
                    let g = param.grad.data()[i] + wd * param.value.data()[i];
                    let v = m * slot.acc.data()[i] + g;
                    slot.acc.data_mut()[i] = v;
                    param.value.data_mut()[i] -= lr_t * v;
                }
            }
            OptimizerKind::RmsProp { decay, momentum, eps } => {
                let d = T::from_f(decay);
                let m = T::from_f(momentum);
                let e = T::from_f(eps);
                let one_minus_d = T::one() - d;
                for i in 0..param.len() {
                    let g = param.grad.data()[i] + wd * param.value.data()[i];
                    let r = d * slot.acc.data()[i] + one_minus_d * g * g;
                    slot.acc.data_mut()[i] = r;
                    let u = m * slot.update.data()[i] + lr_t * g / (r + e).sqrt();
                    slot.update.data_mut()[i] = u;
                    param.value.data_mut()[i] -= u;
                }
            }
        }
    }
}

/// Staircase exponential decay: lr0 · decay^⌊epoch / epochs_per_decay⌋.
pub fn lr_schedule(epoch: f64, epochs_per_decay: f64, decay: f64, lr0: f64) -> f64 {
    lr0 * decay.powi((epoch / epochs_per_decay).floor() as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(v: f64) -> Parameter<f64> {
        Parameter::new(Tensor::full(&[1], v))
    }

    #[test]
    fn zero_gradient_leaves_parameters_alone() {
        for kind in [
            OptimizerKind::SgdMomentum { momentum: 0.9 },
            OptimizerKind::RmsProp { decay: 0.9, momentum: 0.9, eps: 1e-8 },
        ] {
            let mut p = param(1.5);
            let mut opt = Optimizer::new(kind, 0.0);
            opt.step(&mut [&mut p], 0.1);
            assert_eq!(p.value.data()[0], 1.5);
        }
    }

    #[test]
    fn plain_sgd_moves_against_gradient() {
        let mut p = param(1.0);
        p.grad.fill(1.0);
        let mut opt = Optimizer::new(OptimizerKind::SgdMomentum { momentum: 0.0 }, 0.0);
        opt.step(&mut [&mut p], 0.1);
        assert!((p.value.data()[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rmsprop_single_step_matches_formula() {
        // d=0.9, m=0, g=2, r0=0, eps=1e-8, lr=0.048:
        // r = 0.1·4 = 0.4, Δp = −0.048·2/√(0.4+1e−8)
        let mut p = param(0.0);
        p.grad.fill(2.0);
        let mut opt =
            Optimizer::new(OptimizerKind::RmsProp { decay: 0.9, momentum: 0.0, eps: 1e-8 }, 0.0);
        opt.step(&mut [&mut p], 0.048);
        let want = -0.048 * 2.0 / (0.4f64 + 1e-8).sqrt();
        assert!((p.value.data()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn weight_decay_is_an_l2_pull() {
        let mut p = param(2.0);
        let mut opt = Optimizer::new(OptimizerKind::SgdMomentum { momentum: 0.0 }, 0.5);
        opt.step(&mut [&mut p], 0.1);
        // g = 0 + 0.5·2 = 1 → p = 2 − 0.1
        assert!((p.value.data()[0] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn frozen_parameters_are_skipped() {
        let mut p = param(1.0);
        p.grad.fill(5.0);
        p.trainable = false;
        let mut opt = Optimizer::new(OptimizerKind::SgdMomentum { momentum: 0.0 }, 0.0);
        opt.step(&mut [&mut p], 0.1);
        assert_eq!(p.value.data()[0], 1.0);
    }

    #[test]
    fn schedule_matches_the_closed_form() {
        assert_eq!(lr_schedule(0.0, 2.4, 0.97, 0.048), 0.048);
        assert_eq!(lr_schedule(2.4, 2.4, 0.97, 0.048), 0.048 * 0.97);
        assert_eq!(lr_schedule(24.0, 2.4, 0.97, 0.048), 0.048 * 0.97f64.powi(10));
        assert_eq!(lr_schedule(2.0, 2.4, 0.97, 0.048), 0.048);
    }
}
