//! Dense row-major tensor.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use rand::Rng;

/// Dense tensor with row-major layout. Activations use NCHW order.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn zeros(dims: &[usize]) -> Self {
        assert!(!dims.is_empty() && dims.iter().all(|&d| d >= 1), "bad dims {dims:?}");
        Tensor { dims: dims.to_vec(), data: vec![T::zero(); dims.iter().product()] }
    }

    pub fn full(dims: &[usize], v: T) -> Self {
        let mut t = Self::zeros(dims);
        t.data.fill(v);
        t
    }

    pub fn from_vec(dims: &[usize], data: Vec<T>) -> Result<Self> {
        let n: usize = dims.iter().product();
        if n != data.len() || dims.is_empty() {
            return Err(Error::Dimension(format!(
                "data length {} does not match dims {:?}",
                data.len(),
                dims
            )));
        }
        Ok(Tensor { dims: dims.to_vec(), data })
    }

    /// Uniform samples in [lo, hi).
    pub fn rand_uniform<R: Rng>(dims: &[usize], lo: T, hi: T, rng: &mut R) -> Self {
        let mut t = Self::zeros(dims);
        for v in &mut t.data {
            *v = rng.gen_range(lo..hi);
        }
        t
    }

    /// Normal samples with the given standard deviation.
    pub fn rand_normal<R: Rng>(dims: &[usize], std: T, rng: &mut R) -> Self {
        let mut t = Self::zeros(dims);
        for v in &mut t.data {
            *v = T::sample_standard_normal(rng) * std;
        }
        t
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn fill(&mut self, v: T) {
        self.data.fill(v);
    }

    /// Reinterpret with new dims of identical element count.
    pub fn reshape(mut self, dims: &[usize]) -> Self {
        assert_eq!(self.len(), dims.iter().product::<usize>(), "reshape size mismatch");
        self.dims = dims.to_vec();
        self
    }

    /// Batch size for NCHW activations.
    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    /// NCHW accessors; panic on rank mismatch.
    pub fn nchw(&self) -> (usize, usize, usize, usize) {
        assert_eq!(self.dims.len(), 4, "expected NCHW tensor, got dims {:?}", self.dims);
        (self.dims[0], self.dims[1], self.dims[2], self.dims[3])
    }

    /// Contiguous H*W plane of one (batch, channel) pair.
    pub fn plane(&self, n: usize, c: usize) -> &[T] {
        let (_, ch, h, w) = self.nchw();
        let hw = h * w;
        let off = (n * ch + c) * hw;
        &self.data[off..off + hw]
    }

    pub fn plane_mut(&mut self, n: usize, c: usize) -> &mut [T] {
        let (_, ch, h, w) = self.nchw();
        let hw = h * w;
        let off = (n * ch + c) * hw;
        &mut self.data[off..off + hw]
    }

    pub fn map(mut self, f: impl Fn(T) -> T) -> Self {
        for v in &mut self.data {
            *v = f(*v);
        }
        self
    }

    /// Element-wise a += b.
    pub fn add_assign(&mut self, other: &Self) {
        assert_eq!(self.dims, other.dims, "add_assign dims mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += *b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for v in &mut self.data {
            *v *= s;
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| U::from_f(v.to_f64())).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plane_offsets_follow_nchw_layout() {
        let mut t = Tensor::<f32>::zeros(&[2, 3, 2, 2]);
        t.plane_mut(1, 2).fill(7.0);
        assert_eq!(&t.data()[20..24], &[7.0; 4]);
        assert_eq!(t.plane(0, 0), &[0.0; 4]);
    }

    #[test]
    fn from_vec_rejects_mismatched_len() {
        assert!(Tensor::<f32>::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }
}
