//! 2-D convolution (cross-correlation) with zero padding and channel groups.

use super::linalg::{gemm_abt_acc, gemm_acc, gemm_atb_acc};
use super::param::Parameter;
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::Rng;

/// Convolution layer. Weight layout is OIHW with the input extent divided by
/// `groups`; `groups == cin` with `cout == cin` is the depthwise case and
/// `kernel == 1` the pointwise case, which take direct paths.
#[derive(Debug, Clone)]
pub struct Conv2d<T> {
    pub weight: Parameter<T>,
    pub bias: Option<Parameter<T>>,
    pub cin: usize,
    pub cout: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
    pub groups: usize,
    cache_x: Option<Tensor<T>>,
}

impl<T: Scalar> Conv2d<T> {
    /// Fan-out normal init (std = sqrt(2 / (k²·cout/groups))); bias zeroed.
    pub fn new(
        cin: usize,
        cout: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        groups: usize,
        bias: bool,
        rng: &mut impl Rng,
    ) -> Self {
        assert!(cin % groups == 0 && cout % groups == 0, "channels not divisible by groups");
        let fan_out = kernel * kernel * cout / groups;
        let std = T::from_f((2.0 / fan_out as f64).sqrt());
        let weight =
            Parameter::new(Tensor::rand_normal(&[cout, cin / groups, kernel, kernel], std, rng));
        let bias = bias.then(|| Parameter::new(Tensor::zeros(&[cout])));
        Conv2d { weight, bias, cin, cout, kernel, stride, padding, groups, cache_x: None }
    }

    pub fn out_hw(&self, h: usize, w: usize) -> (usize, usize) {
        (
            (h + 2 * self.padding - self.kernel) / self.stride + 1,
            (w + 2 * self.padding - self.kernel) / self.stride + 1,
        )
    }

    pub fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        self.compute(x)
    }

    pub fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let y = self.compute(x);
        self.cache_x = Some(x.clone());
        y
    }

    /// Install the input `backward` should differentiate against, for callers
    /// that ran the forward pass through `infer` (composite layers).
    pub fn cache_mid(&mut self, x: Tensor<T>) {
        self.cache_x = Some(x);
    }

    fn compute(&self, x: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = x.nchw();
        assert_eq!(c, self.cin, "conv input channels {c} != {}", self.cin);
        let (oh, ow) = self.out_hw(h, w);
        let mut y = Tensor::zeros(&[n, self.cout, oh, ow]);

        if self.is_depthwise() {
            self.depthwise_forward(x, &mut y);
        } else if self.kernel == 1 && self.groups == 1 {
            self.pointwise_forward(x, &mut y);
        } else {
            self.im2col_forward(x, &mut y);
        }

        if let Some(b) = &self.bias {
            let hw = oh * ow;
            for ni in 0..n {
                for co in 0..self.cout {
                    let bv = b.value.data()[co];
                    for v in &mut y.data_mut()[(ni * self.cout + co) * hw..][..hw] {
                        *v += bv;
                    }
                }
            }
        }
        y
    }

    /// Backpropagate, accumulating weight/bias gradients; returns dL/dx.
    pub fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let x = self.cache_x.take().expect("conv backward without forward_train");
        let (n, _, _, _) = x.nchw();
        let mut dx = Tensor::zeros(x.dims());

        if let Some(b) = &mut self.bias {
            let (_, co, oh, ow) = dy.nchw();
            let hw = oh * ow;
            for ni in 0..n {
                for c in 0..co {
                    let mut acc = T::zero();
                    for &v in &dy.data()[(ni * co + c) * hw..][..hw] {
                        acc += v;
                    }
                    b.grad.data_mut()[c] += acc;
                }
            }
        }

        if self.is_depthwise() {
            self.depthwise_backward(&x, dy, &mut dx);
        } else if self.kernel == 1 && self.groups == 1 {
            self.pointwise_backward(&x, dy, &mut dx);
        } else {
            self.im2col_backward(&x, dy, &mut dx);
        }
        dx
    }

    fn is_depthwise(&self) -> bool {
        self.groups == self.cin && self.cout == self.cin && self.groups > 1
    }

    // --- pointwise (1x1, groups == 1) ---

    // With stride 1 this is W[cout×cin] · X[cin×(h·w)] per sample; larger
    // strides subsample the input columns first.
    fn pointwise_forward(&self, x: &Tensor<T>, y: &mut Tensor<T>) {
        let (n, c, h, w) = x.nchw();
        let (_, co, oh, ow) = y.nchw();
        let (ihw, ohw) = (h * w, oh * ow);
        let wmat = self.weight.value.data();
        let mut sub = vec![T::zero(); c * ohw];
        for ni in 0..n {
            let xs = &x.data()[ni * c * ihw..(ni + 1) * c * ihw];
            let cols: &[T] = if self.stride == 1 {
                xs
            } else {
                for ci in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            sub[(ci * oh + oy) * ow + ox] =
                                xs[(ci * h + oy * self.stride) * w + ox * self.stride];
                        }
                    }
                }
                &sub
            };
            let ys = &mut y.data_mut()[ni * co * ohw..(ni + 1) * co * ohw];
            gemm_acc(co, c, ohw, wmat, cols, ys);
        }
    }

    fn pointwise_backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>, dx: &mut Tensor<T>) {
        let (n, c, h, w) = x.nchw();
        let (_, co, oh, ow) = dy.nchw();
        let (ihw, ohw) = (h * w, oh * ow);
        let wmat = self.weight.value.data();
        let mut sub = vec![T::zero(); c * ohw];
        let mut dsub = vec![T::zero(); c * ohw];
        for ni in 0..n {
            let xs = &x.data()[ni * c * ihw..(ni + 1) * c * ihw];
            let dys = &dy.data()[ni * co * ohw..(ni + 1) * co * ohw];
            let cols: &[T] = if self.stride == 1 {
                xs
            } else {
                for ci in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            sub[(ci * oh + oy) * ow + ox] =
                                xs[(ci * h + oy * self.stride) * w + ox * self.stride];
                        }
                    }
                }
                &sub
            };
            // dW += dY · colsᵀ
            gemm_abt_acc(co, c, ohw, dys, cols, self.weight.grad.data_mut());
            // dcols = Wᵀ · dY
            if self.stride == 1 {
                let dxs = &mut dx.data_mut()[ni * c * ihw..(ni + 1) * c * ihw];
                gemm_atb_acc(co, c, ohw, wmat, dys, dxs);
            } else {
                dsub.fill(T::zero());
                gemm_atb_acc(co, c, ohw, wmat, dys, &mut dsub);
                let dxs = &mut dx.data_mut()[ni * c * ihw..(ni + 1) * c * ihw];
                for ci in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            dxs[(ci * h + oy * self.stride) * w + ox * self.stride] +=
                                dsub[(ci * oh + oy) * ow + ox];
                        }
                    }
                }
            }
        }
    }

    // --- depthwise ---

    fn depthwise_forward(&self, x: &Tensor<T>, y: &mut Tensor<T>) {
        let (n, c, h, w) = x.nchw();
        let (_, _, oh, ow) = y.nchw();
        let k = self.kernel;
        for ni in 0..n {
            for ci in 0..c {
                let xp = x.plane(ni, ci);
                let wk = &self.weight.value.data()[ci * k * k..(ci + 1) * k * k];
                let yp = y.plane_mut(ni, ci);
                for oy in 0..oh {
                    for ky in 0..k {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let xrow = &xp[iy as usize * w..(iy as usize + 1) * w];
                        for kx in 0..k {
                            let wv = wk[ky * k + kx];
                            let xoff = kx as isize - self.padding as isize;
                            for ox in 0..ow {
                                let ix = (ox * self.stride) as isize + xoff;
                                if ix >= 0 && ix < w as isize {
                                    yp[oy * ow + ox] += wv * xrow[ix as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    fn depthwise_backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>, dx: &mut Tensor<T>) {
        let (n, c, h, w) = x.nchw();
        let (_, _, oh, ow) = dy.nchw();
        let k = self.kernel;
        for ni in 0..n {
            for ci in 0..c {
                let xp = x.plane(ni, ci);
                let dyp = dy.plane(ni, ci);
                let wk = &self.weight.value.data()[ci * k * k..(ci + 1) * k * k];
                let dwk = &mut self.weight.grad.data_mut()[ci * k * k..(ci + 1) * k * k];
                let dxp = dx.plane_mut(ni, ci);
                for oy in 0..oh {
                    for ky in 0..k {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = iy as usize * w;
                        for kx in 0..k {
                            let wv = wk[ky * k + kx];
                            let mut wg = T::zero();
                            let xoff = kx as isize - self.padding as isize;
                            for ox in 0..ow {
                                let ix = (ox * self.stride) as isize + xoff;
                                if ix >= 0 && ix < w as isize {
                                    let g = dyp[oy * ow + ox];
                                    wg += g * xp[row + ix as usize];
                                    dxp[row + ix as usize] += g * wv;
                                }
                            }
                            dwk[ky * k + kx] += wg;
                        }
                    }
                }
            }
        }
    }

    // --- general path: im2col per sample and group ---

    fn col_dims(&self, h: usize, w: usize) -> (usize, usize) {
        let (oh, ow) = self.out_hw(h, w);
        ((self.cin / self.groups) * self.kernel * self.kernel, oh * ow)
    }

    fn im2col(&self, xs: &[T], h: usize, w: usize, group: usize, col: &mut [T]) {
        let cg = self.cin / self.groups;
        let k = self.kernel;
        let (oh, ow) = self.out_hw(h, w);
        for ci in 0..cg {
            let xp = &xs[(group * cg + ci) * h * w..];
            for ky in 0..k {
                for kx in 0..k {
                    let r = ((ci * k + ky) * k + kx) * oh * ow;
                    for oy in 0..oh {
                        let iy = (oy * self.stride + ky) as isize - self.padding as isize;
                        for ox in 0..ow {
                            let ix = (ox * self.stride + kx) as isize - self.padding as isize;
                            col[r + oy * ow + ox] =
                                if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                                    xp[iy as usize * w + ix as usize]
                                } else {
                                    T::zero()
                                };
                        }
                    }
                }
            }
        }
    }

    fn im2col_forward(&self, x: &Tensor<T>, y: &mut Tensor<T>) {
        let (n, c, h, w) = x.nchw();
        let (_, co, oh, ow) = y.nchw();
        let (rows, cols_n) = self.col_dims(h, w);
        let cog = co / self.groups;
        let mut col = vec![T::zero(); rows * cols_n];
        for ni in 0..n {
            let xs = &x.data()[ni * c * h * w..(ni + 1) * c * h * w];
            for g in 0..self.groups {
                self.im2col(xs, h, w, g, &mut col);
                let wg = &self.weight.value.data()[g * cog * rows..(g + 1) * cog * rows];
                let ys = &mut y.data_mut()[(ni * co + g * cog) * oh * ow..][..cog * oh * ow];
                gemm_acc(cog, rows, cols_n, wg, &col, ys);
            }
        }
    }

    fn im2col_backward(&mut self, x: &Tensor<T>, dy: &Tensor<T>, dx: &mut Tensor<T>) {
        let (n, c, h, w) = x.nchw();
        let (_, co, oh, ow) = dy.nchw();
        let (rows, cols_n) = self.col_dims(h, w);
        let cog = co / self.groups;
        let cg = self.cin / self.groups;
        let k = self.kernel;
        let mut col = vec![T::zero(); rows * cols_n];
        let mut dcol = vec![T::zero(); rows * cols_n];
        for ni in 0..n {
            let xs = &x.data()[ni * c * h * w..(ni + 1) * c * h * w];
            for g in 0..self.groups {
                self.im2col(xs, h, w, g, &mut col);
                let dys = &dy.data()[(ni * co + g * cog) * oh * ow..][..cog * oh * ow];
                // dW += dY · colᵀ
                gemm_abt_acc(
                    cog,
                    rows,
                    cols_n,
                    dys,
                    &col,
                    &mut self.weight.grad.data_mut()[g * cog * rows..(g + 1) * cog * rows],
                );
                // dcol = Wᵀ · dY, then scatter back (col2im)
                dcol.fill(T::zero());
                let wg = &self.weight.value.data()[g * cog * rows..(g + 1) * cog * rows];
                gemm_atb_acc(cog, rows, cols_n, wg, dys, &mut dcol);
                let dxs = &mut dx.data_mut()[ni * c * h * w..(ni + 1) * c * h * w];
                for ci in 0..cg {
                    let dxp = &mut dxs[(g * cg + ci) * h * w..(g * cg + ci + 1) * h * w];
                    for ky in 0..k {
                        for kx in 0..k {
                            let r = ((ci * k + ky) * k + kx) * oh * ow;
                            for oy in 0..oh {
                                let iy =
                                    (oy * self.stride + ky) as isize - self.padding as isize;
                                if iy < 0 || iy >= h as isize {
                                    continue;
                                }
                                for ox in 0..ow {
                                    let ix =
                                        (ox * self.stride + kx) as isize - self.padding as isize;
                                    if ix >= 0 && ix < w as isize {
                                        dxp[iy as usize * w + ix as usize] +=
                                            dcol[r + oy * ow + ox];
                                    }
                                }
                            }
                        }
                    }
                }
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
    fn box_kernel_counts_neighbors() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut conv = Conv2d::<f64>::new(1, 1, 3, 1, 1, 1, false, &mut rng);
        conv.weight.value.fill(1.0);
        let x = Tensor::full(&[1, 1, 3, 3], 1.0);
        let y = conv.infer(&x);
        assert_eq!(y.data()[4], 9.0, "center sees the full 3x3 box");
        assert_eq!(y.data()[0], 4.0, "corner sees a 2x2 box");
        assert_eq!(y.data()[1], 6.0);
    }

    #[test]
    fn unit_pointwise_kernel_is_identity() {
        let mut rng = ChaCha20Rng::seed_from_u64(0);
        let mut conv = Conv2d::<f64>::new(1, 1, 1, 1, 0, 1, false, &mut rng);
        conv.weight.value.fill(1.0);
        let x = Tensor::rand_uniform(&[2, 1, 4, 5], -1.0, 1.0, &mut rng);
        assert_eq!(conv.infer(&x), x);
    }

    #[test]
    fn depthwise_equals_independent_single_channel_convs() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let c = 3;
        let dw = Conv2d::<f64>::new(c, c, 3, 2, 1, c, false, &mut rng);
        let x = Tensor::rand_uniform(&[2, c, 6, 6], -1.0, 1.0, &mut rng);
        let y = dw.infer(&x);
        for ci in 0..c {
            let mut single = Conv2d::<f64>::new(1, 1, 3, 2, 1, 1, false, &mut rng);
            single
                .weight
                .value
                .data_mut()
                .copy_from_slice(&dw.weight.value.data()[ci * 9..(ci + 1) * 9]);
            for ni in 0..2 {
                let xi = Tensor::from_vec(&[1, 1, 6, 6], x.plane(ni, ci).to_vec()).unwrap();
                let yi = single.infer(&xi);
                assert_eq!(yi.data(), y.plane(ni, ci));
            }
        }
    }

    #[test]
    fn grouped_im2col_matches_manual_split() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let conv = Conv2d::<f64>::new(4, 6, 3, 1, 1, 2, false, &mut rng);
        let x = Tensor::rand_uniform(&[1, 4, 5, 5], -1.0, 1.0, &mut rng);
        let y = conv.infer(&x);

        for g in 0..2 {
            let mut half = Conv2d::<f64>::new(2, 3, 3, 1, 1, 1, false, &mut rng);
            half.weight
                .value
                .data_mut()
                .copy_from_slice(&conv.weight.value.data()[g * 3 * 2 * 9..(g + 1) * 3 * 2 * 9]);
            let mut xs = Vec::new();
            xs.extend_from_slice(x.plane(0, g * 2));
            xs.extend_from_slice(x.plane(0, g * 2 + 1));
            let xg = Tensor::from_vec(&[1, 2, 5, 5], xs).unwrap();
            let yg = half.infer(&xg);
            for co in 0..3 {
                assert_eq!(yg.plane(0, co), y.plane(0, g * 3 + co));
            }
        }
    }
}
