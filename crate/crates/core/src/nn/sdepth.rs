//! Stochastic depth for residual branches.

use super::Mode;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Combine a shortcut `x` with its `residual` branch under stochastic depth.
///
/// Train mode keeps the branch with probability `survive_p`, scaling it by
/// 1/survive_p when kept (inverted convention), and skips it otherwise. Eval
/// mode always returns `x + residual` and consumes no randomness. Returns the
/// output and whether the branch was kept.
pub fn stochastic_depth<T: Scalar>(
    x: &Tensor<T>,
    residual: &Tensor<T>,
    survive_p: f64,
    mode: Mode,
    rng: &mut impl Rng,
) -> (Tensor<T>, bool) {
    assert_eq!(x.dims(), residual.dims(), "stochastic depth dims mismatch");
    assert!(survive_p > 0.0 && survive_p <= 1.0, "survive_p must be in (0, 1]");
    match mode {
        Mode::Eval => {
            let mut y = x.clone();
            y.add_assign(residual);
            (y, true)
        }
        Mode::Train => {
            if survive_p >= 1.0 {
                let mut y = x.clone();
                y.add_assign(residual);
                return (y, true);
            }
            let keep = rng.gen_range(0.0f64..1.0) < survive_p;
            if keep {
                let s = T::from_f(1.0 / survive_p);
                let mut y = x.clone();
                for (a, &b) in y.data_mut().iter_mut().zip(residual.data()) {
                    *a += b * s;
                }
                (y, true)
            } else {
                (x.clone(), false)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn survive_one_always_adds_branch() {
        let mut rng = ChaCha20Rng::seed_from_u64(9);
        let x = Tensor::full(&[1, 2, 2, 2], 1.0f64);
        let r = Tensor::full(&[1, 2, 2, 2], 0.5f64);
        for _ in 0..100 {
            let (y, kept) = stochastic_depth(&x, &r, 1.0, Mode::Train, &mut rng);
            assert!(kept);
            assert!(y.data().iter().all(|&v| v == 1.5));
        }
    }

    #[test]
    fn eval_ignores_rng_state() {
        let x = Tensor::full(&[1, 1, 2, 2], 2.0f64);
        let r = Tensor::full(&[1, 1, 2, 2], 3.0f64);
        let mut a = ChaCha20Rng::seed_from_u64(1);
        let mut b = ChaCha20Rng::seed_from_u64(999);
        let (ya, _) = stochastic_depth(&x, &r, 0.5, Mode::Eval, &mut a);
        let (yb, _) = stochastic_depth(&x, &r, 0.5, Mode::Eval, &mut b);
        assert_eq!(ya, yb);
        assert!(ya.data().iter().all(|&v| v == 5.0));
    }

    #[test]
    fn keep_fraction_tracks_survival_probability() {
        let mut rng = ChaCha20Rng::seed_from_u64(1234);
        let x = Tensor::full(&[1, 1, 1, 1], 0.0f64);
        let r = Tensor::full(&[1, 1, 1, 1], 1.0f64);
        let mut kept = 0usize;
        let n = 10_000;
        for _ in 0..n {
            let (_, k) = stochastic_depth(&x, &r, 0.8, Mode::Train, &mut rng);
            kept += k as usize;
        }
        let frac = kept as f64 / n as f64;
        assert!((frac - 0.8).abs() < 0.02, "kept fraction {frac} vs 0.8 ± 0.02");
    }
}
