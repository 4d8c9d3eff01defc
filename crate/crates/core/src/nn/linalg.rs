//! Small dense matrix kernels.
//!
//! All kernels accumulate with a fixed contraction order per output element,
//! so results are bit-identical run to run.

use crate::scalar::Scalar;

const J_TILE: usize = 512;

/// C[m×n] += A[m×k] · B[k×n], row-major.
pub fn gemm_acc<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let mut jb = 0;
    while jb < n {
        let jw = J_TILE.min(n - jb);
        let mut i = 0;
        // four output rows at a time to reuse each B row
        while i + 4 <= m {
            let (a0, a1, a2, a3) =
                (&a[i * k..], &a[(i + 1) * k..], &a[(i + 2) * k..], &a[(i + 3) * k..]);
            for kk in 0..k {
                let (v0, v1, v2, v3) = (a0[kk], a1[kk], a2[kk], a3[kk]);
                let brow = &b[kk * n + jb..kk * n + jb + jw];
                let base = i * n + jb;
                for j in 0..jw {
                    let bv = brow[j];
                    c[base + j] += v0 * bv;
                    c[base + n + j] += v1 * bv;
                    c[base + 2 * n + j] += v2 * bv;
                    c[base + 3 * n + j] += v3 * bv;
                }
            }
            i += 4;
        }
        while i < m {
            for kk in 0..k {
                let v = a[i * k + kk];
                let brow = &b[kk * n + jb..kk * n + jb + jw];
                let crow = &mut c[i * n + jb..i * n + jb + jw];
                for j in 0..jw {
                    crow[j] += v * brow[j];
                }
            }
            i += 1;
        }
        jb += jw;
    }
}

/// C[k×n] += Aᵀ · B for A[m×k], B[m×n].
pub fn gemm_atb_acc<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    debug_assert_eq!(c.len(), k * n);
    let mut jb = 0;
    while jb < n {
        let jw = J_TILE.min(n - jb);
        for i in 0..m {
            let arow = &a[i * k..(i + 1) * k];
            let brow = &b[i * n + jb..i * n + jb + jw];
            for kk in 0..k {
                let v = arow[kk];
                if v == T::zero() {
                    continue;
                }
                let crow = &mut c[kk * n + jb..kk * n + jb + jw];
                for j in 0..jw {
                    crow[j] += v * brow[j];
                }
            }
        }
        jb += jw;
    }
}

/// C[m×k] += A · Bᵀ for A[m×n], B[k×n]: row-by-row dot products. Eight
/// independent accumulator lanes, combined in a fixed order, keep the
/// reduction vectorizable and bit-stable.
pub fn gemm_abt_acc<T: Scalar>(m: usize, k: usize, n: usize, a: &[T], b: &[T], c: &mut [T]) {
    debug_assert_eq!(a.len(), m * n);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * k);
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        for kk in 0..k {
            let brow = &b[kk * n..(kk + 1) * n];
            let mut lanes = [T::zero(); 8];
            let mut ac = arow.chunks_exact(8);
            let mut bc = brow.chunks_exact(8);
            for (av, bv) in (&mut ac).zip(&mut bc) {
                for l in 0..8 {
                    lanes[l] += av[l] * bv[l];
                }
            }
            let mut acc = T::zero();
            for (&av, &bv) in ac.remainder().iter().zip(bc.remainder()) {
                acc += av * bv;
            }
            for l in lanes {
                acc += l;
            }
            c[i * k + kk] += acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(m: usize, k: usize, n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for kk in 0..k {
                for j in 0..n {
                    c[i * n + j] += a[i * k + kk] * b[kk * n + j];
                }
            }
        }
        c
    }

    #[test]
    fn gemm_variants_match_naive() {
        let (m, k, n) = (7, 5, 9);
        let a: Vec<f64> = (0..m * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..k * n).map(|i| (i as f64 * 0.11).cos()).collect();
        let want = naive(m, k, n, &a, &b);

        let mut c = vec![0.0; m * n];
        gemm_acc(m, k, n, &a, &b, &mut c);
        assert!(c.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-12));

        // Aᵀ·B with A stored transposed should reproduce the same product.
        let mut at = vec![0.0; k * m];
        for i in 0..m {
            for kk in 0..k {
                at[kk * m + i] = a[i * k + kk];
            }
        }
        let mut c2 = vec![0.0; m * n];
        gemm_atb_acc(k, m, n, &at, &b, &mut c2);
        assert!(c2.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-12));

        // A·Bᵀ with B stored transposed likewise.
        let mut bt = vec![0.0; n * k];
        for kk in 0..k {
            for j in 0..n {
                bt[j * k + kk] = b[kk * n + j];
            }
        }
        let mut c3 = vec![0.0; m * n];
        gemm_abt_acc(m, n, k, &a, &bt, &mut c3);
        assert!(c3.iter().zip(&want).all(|(x, y)| (x - y).abs() < 1e-12));
    }
}
