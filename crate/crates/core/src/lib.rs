//! Frequency-domain utilization networks.
//!
//! A JPEG-style DCT preprocessing codec, a minimal dense-tensor engine with
//! reverse-mode differentiation, declarative builders for the eFUN/ResFUN
//! architecture family with exact parameter/MAC accounting, dynamic
//! frequency-channel compression, and a toy-scale training harness.
//!
//! The numeric core is generic over the scalar type: `f32` is the pipeline
//! scalar for training and inference, `f64` is used by the gradient-check
//! oracles. Concrete aliases live at the crate root.

pub mod arch;
pub mod compress;
pub mod data;
pub mod dct;
pub mod error;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod tensor;
pub mod train;
pub mod weights;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Pipeline-precision tensor (training and inference).
pub type Tensor32 = tensor::Tensor<f32>;
/// Double-precision tensor (gradient-check oracles).
pub type Tensor64 = tensor::Tensor<f64>;
/// Pipeline-precision model.
pub type Model32 = model::Model<f32>;
/// Double-precision model.
pub type Model64 = model::Model<f64>;
