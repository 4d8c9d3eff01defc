//! Minimal dense-tensor engine: exactly the operator set the FUN
//! architectures need, with forward and reverse-mode differentiation.
//!
//! Layers own their parameters and the activations cached by the training
//! forward pass. `infer` is the pure eval path (running statistics, no
//! mutation); `forward_train` caches what `backward` consumes. Everything is
//! generic over the scalar so the finite-difference oracles can run the same
//! code in f64.

pub mod act;
pub mod conv;
pub mod linalg;
pub mod loss;
pub mod norm;
pub mod optim;
pub mod param;
pub mod pool;
pub mod sdepth;
pub mod se;

pub use act::{Activation, ActLayer};
pub use conv::Conv2d;
pub use loss::softmax_cross_entropy;
pub use norm::BatchNorm2d;
pub use optim::{lr_schedule, Optimizer, OptimizerKind};
pub use param::Parameter;
pub use pool::{global_avg_pool, GlobalAvgPool, Linear};
pub use sdepth::stochastic_depth;
pub use se::SqueezeExcite;

/// Forward-pass mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}
