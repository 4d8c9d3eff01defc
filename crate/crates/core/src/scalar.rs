//! Scalar abstraction for the numeric core.

use rand::distributions::uniform::SampleUniform;
use rand::Rng;

/// Floating-point scalar the tensor engine is generic over.
///
/// `f32` is the pipeline scalar; `f64` exists for the finite-difference
/// gradient-check oracles, which need headroom below the 1e-5 gate.
pub trait Scalar:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumAssign + SampleUniform + 'static
{
    fn from_f(v: f64) -> Self {
        <Self as num_traits::FromPrimitive>::from_f64(v).unwrap()
    }

    fn to_f64(self) -> f64;

    /// Standard normal sample. Box-Muller on the raw uniform stream so the
    /// draw sequence is identical for every scalar type under the same seed.
    fn sample_standard_normal<R: Rng>(rng: &mut R) -> Self {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        Self::from_f(z)
    }
}

impl Scalar for f32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}
