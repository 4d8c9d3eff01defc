//! Instantiated models: parameters plus topology, with training and
//! inference passes.
//!
//! Parameter initialization consumes the seeded generator in declaration
//! order: front (when present), then blocks in stage order (expand conv/bn,
//! depthwise conv/bn, squeeze-excite reduce/expand, project conv/bn; for
//! bottlenecks conv1/bn1, conv2/bn2, conv3/bn3, shortcut conv/bn), then the
//! head conv/bn and the classifier. The same order defines the serialized
//! state layout.

use crate::arch::{ArchSpec, BlockSpec, Operator};
use crate::dct::{dct_basis, zigzag_order};
use crate::error::{Error, Result};
use crate::nn::{
    stochastic_depth, ActLayer, Activation, BatchNorm2d, Conv2d, GlobalAvgPool, Linear, Mode,
    Parameter, SqueezeExcite,
};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

/// Fixed per-channel standardization applied to the frequency tensor before
/// the first block. Statistics come from the training set and ride along in
/// the weights file.
#[derive(Debug, Clone)]
pub struct ChannelNorm<T> {
    pub mean: Vec<T>,
    pub std: Vec<T>,
}

impl<T: Scalar> ChannelNorm<T> {
    pub fn identity(channels: usize) -> Self {
        ChannelNorm { mean: vec![T::zero(); channels], std: vec![T::one(); channels] }
    }

    pub fn apply(&self, x: &Tensor<T>) -> Tensor<T> {
        let (n, c, _, _) = x.nchw();
        assert_eq!(c, self.mean.len(), "normalization channel mismatch");
        let mut y = x.clone();
        for ni in 0..n {
            for ci in 0..c {
                let m = self.mean[ci];
                let inv = T::one() / self.std[ci];
                for v in y.plane_mut(ni, ci) {
                    *v = (*v - m) * inv;
                }
            }
        }
        y
    }

    pub fn backward(&self, dy: &Tensor<T>) -> Tensor<T> {
        let (n, c, _, _) = dy.nchw();
        let mut dx = dy.clone();
        for ni in 0..n {
            for ci in 0..c {
                let inv = T::one() / self.std[ci];
                for v in dx.plane_mut(ni, ci) {
                    *v = *v * inv;
                }
            }
        }
        dx
    }
}

#[derive(Debug, Clone)]
pub struct MbConvBlock<T> {
    pub expand: Option<(Conv2d<T>, BatchNorm2d<T>, ActLayer<T>)>,
    pub dw: Conv2d<T>,
    pub dw_bn: BatchNorm2d<T>,
    pub dw_act: ActLayer<T>,
    pub se: Option<SqueezeExcite<T>>,
    pub project: Conv2d<T>,
    pub project_bn: BatchNorm2d<T>,
    pub skip: bool,
    pub survive_p: f64,
    kept: bool,
}

impl<T: Scalar> MbConvBlock<T> {
    pub(crate) fn new(spec: &BlockSpec, cin: usize, rng: &mut impl Rng) -> Self {
        let cmid = spec.expansion * cin;
        let expand = (spec.expansion != 1).then(|| {
            (
                Conv2d::new(cin, cmid, 1, 1, 0, 1, false, rng),
                BatchNorm2d::new(cmid),
                ActLayer::new(Activation::Swish),
            )
        });
        let dw = Conv2d::new(cmid, cmid, spec.kernel, spec.stride, spec.kernel / 2, cmid, false, rng);
        let se = (spec.se_ratio > 0.0)
            .then(|| SqueezeExcite::new(cmid, spec.se_width(cin), rng));
        MbConvBlock {
            expand,
            dw,
            dw_bn: BatchNorm2d::new(cmid),
            dw_act: ActLayer::new(Activation::Swish),
            se,
            project: Conv2d::new(cmid, spec.out_channels, 1, 1, 0, 1, false, rng),
            project_bn: BatchNorm2d::new(spec.out_channels),
            skip: spec.has_skip(cin),
            survive_p: 1.0,
            kept: true,
        }
    }

    fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        let mut h = x.clone();
        if let Some((c, b, a)) = &self.expand {
            h = a.infer(&b.infer(&c.infer(&h)));
        }
        h = self.dw_act.infer(&self.dw_bn.infer(&self.dw.infer(&h)));
        if let Some(se) = &self.se {
            h = se.infer(&h);
        }
        h = self.project_bn.infer(&self.project.infer(&h));
        if self.skip {
            h.add_assign(x);
        }
        h
    }

    fn forward_train(&mut self, x: &Tensor<T>, rng: &mut impl Rng) -> Tensor<T> {
        let mut h = x.clone();
        if let Some((c, b, a)) = &mut self.expand {
            h = a.forward_train(&b.forward_train(&c.forward_train(&h)));
        }
        h = self.dw_act.forward_train(&self.dw_bn.forward_train(&self.dw.forward_train(&h)));
        if let Some(se) = &mut self.se {
            h = se.forward_train(&h);
        }
        h = self.project_bn.forward_train(&self.project.forward_train(&h));
        if self.skip {
            let (y, kept) = stochastic_depth(x, &h, self.survive_p, Mode::Train, rng);
            self.kept = kept;
            y
        } else {
            h
        }
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let mut g = if self.skip {
            if !self.kept {
                return dy.clone();
            }
            let mut g = dy.clone();
            if self.survive_p < 1.0 {
                g.scale(T::from_f(1.0 / self.survive_p));
            }
            g
        } else {
            dy.clone()
        };
        g = self.project.backward(&self.project_bn.backward(&g));
        if let Some(se) = &mut self.se {
            g = se.backward(&g);
        }
        g = self.dw.backward(&self.dw_bn.backward(&self.dw_act.backward(&g)));
        if let Some((c, b, a)) = &mut self.expand {
            g = c.backward(&b.backward(&a.backward(&g)));
        }
        if self.skip {
            g.add_assign(dy);
        }
        g
    }
}

#[derive(Debug, Clone)]
pub struct BottleneckBlock<T> {
    pub conv1: Conv2d<T>,
    pub bn1: BatchNorm2d<T>,
    pub act1: ActLayer<T>,
    pub conv2: Conv2d<T>,
    pub bn2: BatchNorm2d<T>,
    pub act2: ActLayer<T>,
    pub conv3: Conv2d<T>,
    pub bn3: BatchNorm2d<T>,
    pub shortcut: Option<(Conv2d<T>, BatchNorm2d<T>)>,
    pre_relu: Option<Tensor<T>>,
}

impl<T: Scalar> BottleneckBlock<T> {
    fn new(spec: &BlockSpec, cin: usize, rng: &mut impl Rng) -> Self {
        let out = spec.out_channels;
        let inner = out / spec.expansion;
        let conv1 = Conv2d::new(cin, inner, 1, 1, 0, 1, false, rng);
        let bn1 = BatchNorm2d::new(inner);
        let conv2 =
            Conv2d::new(inner, inner, spec.kernel, spec.stride, spec.kernel / 2, 1, false, rng);
        let bn2 = BatchNorm2d::new(inner);
        let conv3 = Conv2d::new(inner, out, 1, 1, 0, 1, false, rng);
        let bn3 = BatchNorm2d::new(out);
        let shortcut = (spec.stride != 1 || cin != out).then(|| {
            (Conv2d::new(cin, out, 1, spec.stride, 0, 1, false, rng), BatchNorm2d::new(out))
        });
        BottleneckBlock {
            conv1,
            bn1,
            act1: ActLayer::new(Activation::Relu),
            conv2,
            bn2,
            act2: ActLayer::new(Activation::Relu),
            conv3,
            bn3,
            shortcut,
            pre_relu: None,
        }
    }

    fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        let mut h = self.act1.infer(&self.bn1.infer(&self.conv1.infer(x)));
        h = self.act2.infer(&self.bn2.infer(&self.conv2.infer(&h)));
        h = self.bn3.infer(&self.conv3.infer(&h));
        match &self.shortcut {
            Some((c, b)) => h.add_assign(&b.infer(&c.infer(x))),
            None => h.add_assign(x),
        }
        h.map(|v| v.max(T::zero()))
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let mut h = self.act1.forward_train(&self.bn1.forward_train(&self.conv1.forward_train(x)));
        h = self.act2.forward_train(&self.bn2.forward_train(&self.conv2.forward_train(&h)));
        h = self.bn3.forward_train(&self.conv3.forward_train(&h));
        match &mut self.shortcut {
            Some((c, b)) => h.add_assign(&b.forward_train(&c.forward_train(x))),
            None => h.add_assign(x),
        }
        self.pre_relu = Some(h.clone());
        h.map(|v| v.max(T::zero()))
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        let pre = self.pre_relu.take().expect("bottleneck backward without forward_train");
        let mut dsum = dy.clone();
        for (g, &p) in dsum.data_mut().iter_mut().zip(pre.data()) {
            if p <= T::zero() {
                *g = T::zero();
            }
        }
        let mut g = self.bn3.backward(&dsum);
        g = self.conv3.backward(&g);
        g = self.act2.backward(&g);
        g = self.conv2.backward(&self.bn2.backward(&g));
        g = self.act1.backward(&g);
        let mut dx = self.conv1.backward(&self.bn1.backward(&g));
        match &mut self.shortcut {
            Some((c, b)) => dx.add_assign(&c.backward(&b.backward(&dsum))),
            None => dx.add_assign(&dsum),
        }
        dx
    }
}

#[derive(Debug, Clone)]
pub struct ConvBnActBlock<T> {
    pub conv: Conv2d<T>,
    pub bn: BatchNorm2d<T>,
    pub act: ActLayer<T>,
}

impl<T: Scalar> ConvBnActBlock<T> {
    fn new(spec: &BlockSpec, cin: usize, act: Activation, rng: &mut impl Rng) -> Self {
        ConvBnActBlock {
            conv: Conv2d::new(
                cin,
                spec.out_channels,
                spec.kernel,
                spec.stride,
                spec.kernel / 2,
                1,
                false,
                rng,
            ),
            bn: BatchNorm2d::new(spec.out_channels),
            act: ActLayer::new(act),
        }
    }

    fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        self.act.infer(&self.bn.infer(&self.conv.infer(x)))
    }

    fn forward_train(&mut self, x: &Tensor<T>) -> Tensor<T> {
        self.act.forward_train(&self.bn.forward_train(&self.conv.forward_train(x)))
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        self.conv.backward(&self.bn.backward(&self.act.backward(dy)))
    }
}

#[derive(Debug, Clone)]
pub enum Block<T> {
    MbConv(MbConvBlock<T>),
    Bottleneck(BottleneckBlock<T>),
    ConvBnAct(ConvBnActBlock<T>),
}

impl<T: Scalar> Block<T> {
    fn infer(&self, x: &Tensor<T>) -> Tensor<T> {
        match self {
            Block::MbConv(b) => b.infer(x),
            Block::Bottleneck(b) => b.infer(x),
            Block::ConvBnAct(b) => b.infer(x),
        }
    }

    fn forward_train(&mut self, x: &Tensor<T>, rng: &mut impl Rng) -> Tensor<T> {
        match self {
            Block::MbConv(b) => b.forward_train(x, rng),
            Block::Bottleneck(b) => b.forward_train(x),
            Block::ConvBnAct(b) => b.forward_train(x),
        }
    }

    fn backward(&mut self, dy: &Tensor<T>) -> Tensor<T> {
        match self {
            Block::MbConv(b) => b.backward(dy),
            Block::Bottleneck(b) => b.backward(dy),
            Block::ConvBnAct(b) => b.backward(dy),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Head<T> {
    pub conv: Option<(Conv2d<T>, BatchNorm2d<T>, ActLayer<T>)>,
    pub pool: GlobalAvgPool<T>,
    pub fc: Linear<T>,
}

/// Batch of YCbCr planes feeding a learnable front: Y at full resolution,
/// chroma at half.
#[derive(Debug, Clone)]
pub struct PlanesBatch<T> {
    pub y: Tensor<T>,
    pub cb: Tensor<T>,
    pub cr: Tensor<T>,
}

/// Trainable replacement for the static DCT: an 8×8-stride-8 single-input
/// conv with 64 outputs applied per plane (weights shared across planes by
/// default), chroma grids upsampled 2× and the three groups stacked to 192
/// channels — the same layout the static pipeline produces.
#[derive(Debug, Clone)]
pub struct LefunFront<T> {
    convs: Vec<Conv2d<T>>,
    cache: Option<PlanesBatch<T>>,
}

impl<T: Scalar> LefunFront<T> {
    pub fn new(per_plane: bool, rng: &mut impl Rng) -> Self {
        let n = if per_plane { 3 } else { 1 };
        let convs = (0..n).map(|_| Conv2d::new(1, 64, 8, 8, 0, 1, true, rng)).collect();
        LefunFront { convs, cache: None }
    }

    pub fn shared(&self) -> bool {
        self.convs.len() == 1
    }

    pub fn param_count(&self) -> usize {
        self.convs.len() * (8 * 8 * 64 + 64)
    }

    fn conv_idx(&self, plane: usize) -> usize {
        plane.min(self.convs.len() - 1)
    }

    /// Load the orthonormal DCT basis (zigzag output order) with the −128
    /// level shift folded into the bias, making the front reproduce the
    /// static pipeline exactly.
    pub fn init_dct_basis(&mut self) {
        let zz = zigzag_order();
        for conv in &mut self.convs {
            for (oc, &(u, v)) in zz.iter().enumerate() {
                let basis = dct_basis(u, v);
                let mut sum = 0.0;
                for (i, &b) in basis.iter().enumerate() {
                    conv.weight.value.data_mut()[oc * 64 + i] = T::from_f(b);
                    sum += b;
                }
                conv.bias.as_mut().unwrap().value.data_mut()[oc] = T::from_f(-128.0 * sum);
            }
        }
    }

    /// 8×8 filter bank of one plane's conv, per output channel.
    pub fn filters(&self, plane: usize) -> Vec<[f64; 64]> {
        let conv = &self.convs[self.conv_idx(plane)];
        (0..64)
            .map(|oc| {
                let mut f = [0.0f64; 64];
                for (i, fv) in f.iter_mut().enumerate() {
                    *fv = conv.weight.value.data()[oc * 64 + i].to_f64();
                }
                f
            })
            .collect()
    }

    fn upsample2x(x: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = x.nchw();
        let mut y = Tensor::zeros(&[n, c, h * 2, w * 2]);
        for ni in 0..n {
            for ci in 0..c {
                let src = x.plane(ni, ci);
                let dst = y.plane_mut(ni, ci);
                for oy in 0..h * 2 {
                    for ox in 0..w * 2 {
                        dst[oy * w * 2 + ox] = src[(oy / 2) * w + ox / 2];
                    }
                }
            }
        }
        y
    }

    fn downsample_sum(dy: &Tensor<T>) -> Tensor<T> {
        let (n, c, h, w) = dy.nchw();
        let mut dx = Tensor::zeros(&[n, c, h / 2, w / 2]);
        for ni in 0..n {
            for ci in 0..c {
                let src = dy.plane(ni, ci);
                let dst = dx.plane_mut(ni, ci);
                for oy in 0..h {
                    for ox in 0..w {
                        dst[(oy / 2) * (w / 2) + ox / 2] += src[oy * w + ox];
                    }
                }
            }
        }
        dx
    }

    fn compute(&self, planes: &PlanesBatch<T>) -> Tensor<T> {
        let y = self.convs[self.conv_idx(0)].infer(&planes.y);
        let cb = Self::upsample2x(&self.convs[self.conv_idx(1)].infer(&planes.cb));
        let cr = Self::upsample2x(&self.convs[self.conv_idx(2)].infer(&planes.cr));
        let (n, _, gh, gw) = y.nchw();
        let mut out = Tensor::zeros(&[n, 192, gh, gw]);
        for ni in 0..n {
            for (g, part) in [&y, &cb, &cr].iter().enumerate() {
                for ci in 0..64 {
                    out.plane_mut(ni, g * 64 + ci).copy_from_slice(part.plane(ni, ci));
                }
            }
        }
        out
    }

    pub fn infer(&self, planes: &PlanesBatch<T>) -> Tensor<T> {
        self.compute(planes)
    }

    pub fn forward_train(&mut self, planes: &PlanesBatch<T>) -> Tensor<T> {
        let y = self.compute(planes);
        self.cache = Some(planes.clone());
        y
    }

    pub fn backward(&mut self, dy: &Tensor<T>) {
        let planes = self.cache.take().expect("front backward without forward_train");
        let (n, _, gh, gw) = dy.nchw();
        let split = |group: usize, h: usize, w: usize| {
            let mut t = Tensor::zeros(&[n, 64, h, w]);
            for ni in 0..n {
                for ci in 0..64 {
                    t.plane_mut(ni, ci).copy_from_slice(dy.plane(ni, group * 64 + ci));
                }
            }
            t
        };
        let dy_y = split(0, gh, gw);
        let dy_cb = Self::downsample_sum(&split(1, gh, gw));
        let dy_cr = Self::downsample_sum(&split(2, gh, gw));
        for (idx, (grad, input)) in
            [(dy_y, &planes.y), (dy_cb, &planes.cb), (dy_cr, &planes.cr)].iter().enumerate()
        {
            let ci = self.conv_idx(idx);
            self.convs[ci].cache_mid((*input).clone());
            let _ = self.convs[ci].backward(grad);
        }
    }

    fn visit_params(&mut self, f: &mut impl FnMut(&mut Parameter<T>)) {
        for conv in &mut self.convs {
            f(&mut conv.weight);
            if let Some(b) = &mut conv.bias {
                f(b);
            }
        }
    }
}

/// Model input: either the static frequency tensor or raw planes for a
/// learnable front.
pub enum ModelInput<'a, T> {
    Dct(&'a Tensor<T>),
    Planes(&'a PlanesBatch<T>),
}

#[derive(Debug, Clone)]
pub struct Model<T> {
    pub spec: ArchSpec,
    pub front: Option<LefunFront<T>>,
    pub norm: ChannelNorm<T>,
    pub blocks: Vec<Block<T>>,
    pub head: Head<T>,
    pub seed: u64,
    /// Truncation spec the model's inputs are preprocessed with.
    pub keep: crate::dct::CompressionSpec,
}

/// Build and initialize a model from its stage table. Two calls with the same
/// seed produce bit-identical parameters.
pub fn instantiate<T: Scalar>(spec: &ArchSpec, seed: u64) -> Result<Model<T>> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut blocks = Vec::with_capacity(spec.num_blocks());
    let mut width = spec.input.2;
    for (block_spec, cin) in spec.blocks() {
        let block = match block_spec.op {
            Operator::MbConv => Block::MbConv(MbConvBlock::new(&block_spec, cin, &mut rng)),
            Operator::Bottleneck => {
                Block::Bottleneck(BottleneckBlock::new(&block_spec, cin, &mut rng))
            }
            Operator::ConvBnAct(act) => {
                Block::ConvBnAct(ConvBnActBlock::new(&block_spec, cin, act, &mut rng))
            }
        };
        blocks.push(block);
        width = block_spec.out_channels;
    }
    let head_conv = (spec.head_width > 0).then(|| {
        (
            Conv2d::new(width, spec.head_width, 1, 1, 0, 1, false, &mut rng),
            BatchNorm2d::new(spec.head_width),
            ActLayer::new(Activation::Swish),
        )
    });
    let feat = if spec.head_width > 0 { spec.head_width } else { width };
    let fc = Linear::new(feat, spec.num_classes, &mut rng);
    let mut model = Model {
        spec: spec.clone(),
        front: None,
        norm: ChannelNorm::identity(spec.input.2),
        blocks,
        head: Head { conv: head_conv, pool: GlobalAvgPool::default(), fc },
        seed,
        keep: crate::dct::CompressionSpec::FULL,
    };
    model.set_stochastic_depth(0.2);
    Ok(model)
}

impl<T: Scalar> Model<T> {
    /// Attach a learnable front, consuming randomness from a fresh stream.
    pub fn attach_front(&mut self, per_plane: bool, seed: u64) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        self.front = Some(LefunFront::new(per_plane, &mut rng));
    }

    /// Linear survival ramp: first block never dropped, last block dropped
    /// with probability `max_drop`.
    pub fn set_stochastic_depth(&mut self, max_drop: f64) {
        let n = self.blocks.len();
        for (i, block) in self.blocks.iter_mut().enumerate() {
            if let Block::MbConv(b) = block {
                let drop = if n > 1 { max_drop * i as f64 / (n - 1) as f64 } else { 0.0 };
                b.survive_p = 1.0 - drop;
            }
        }
    }

    /// Set the batch-norm blend factor on every body layer (0 freezes the
    /// running statistics).
    pub fn set_bn_momentum(&mut self, momentum: f64) {
        let m = T::from_f(momentum);
        for block in &mut self.blocks {
            match block {
                Block::MbConv(b) => {
                    if let Some((_, bn, _)) = &mut b.expand {
                        bn.momentum = m;
                    }
                    b.dw_bn.momentum = m;
                    b.project_bn.momentum = m;
                }
                Block::Bottleneck(b) => {
                    b.bn1.momentum = m;
                    b.bn2.momentum = m;
                    b.bn3.momentum = m;
                    if let Some((_, bn)) = &mut b.shortcut {
                        bn.momentum = m;
                    }
                }
                Block::ConvBnAct(b) => b.bn.momentum = m,
            }
        }
        if let Some((_, bn, _)) = &mut self.head.conv {
            bn.momentum = m;
        }
    }

    pub fn forward_eval(&self, input: ModelInput<'_, T>) -> Tensor<T> {
        let mut h = match input {
            ModelInput::Dct(x) => self.norm.apply(x),
            ModelInput::Planes(p) => {
                let front = self.front.as_ref().expect("plane input requires a front layer");
                self.norm.apply(&front.infer(p))
            }
        };
        for block in &self.blocks {
            h = block.infer(&h);
        }
        if let Some((c, b, a)) = &self.head.conv {
            h = a.infer(&b.infer(&c.infer(&h)));
        }
        let pooled = self.head.pool.infer(&h);
        self.head.fc.infer(&pooled)
    }

    pub fn forward_train(&mut self, input: ModelInput<'_, T>, rng: &mut impl Rng) -> Tensor<T> {
        let mut h = match input {
            ModelInput::Dct(x) => self.norm.apply(x),
            ModelInput::Planes(p) => {
                let front = self.front.as_mut().expect("plane input requires a front layer");
                self.norm.apply(&front.forward_train(p))
            }
        };
        for block in &mut self.blocks {
            h = block.forward_train(&h, rng);
        }
        if let Some((c, b, a)) = &mut self.head.conv {
            h = a.forward_train(&b.forward_train(&c.forward_train(&h)));
        }
        let pooled = self.head.pool.forward_train(&h);
        self.head.fc.forward_train(&pooled)
    }

    /// Backpropagate from dL/dlogits, accumulating parameter gradients.
    pub fn backward(&mut self, dlogits: &Tensor<T>) {
        let mut g = self.head.fc.backward(dlogits);
        g = self.head.pool.backward(&g);
        if let Some((c, b, a)) = &mut self.head.conv {
            g = c.backward(&b.backward(&a.backward(&g)));
        }
        for block in self.blocks.iter_mut().rev() {
            g = block.backward(&g);
        }
        if let Some(front) = &mut self.front {
            let g = self.norm.backward(&g);
            front.backward(&g);
        }
    }

    /// Visit trainable parameters in declaration order.
    pub fn visit_params(&mut self, mut f: impl FnMut(&mut Parameter<T>)) {
        if let Some(front) = &mut self.front {
            front.visit_params(&mut f);
        }
        self.visit_body_params(&mut f);
    }

    fn visit_body_params(&mut self, f: &mut impl FnMut(&mut Parameter<T>)) {
        let conv = |c: &mut Conv2d<T>, f: &mut dyn FnMut(&mut Parameter<T>)| {
            f(&mut c.weight);
            if let Some(b) = &mut c.bias {
                f(b);
            }
        };
        for block in &mut self.blocks {
            match block {
                Block::MbConv(b) => {
                    if let Some((c, bn, _)) = &mut b.expand {
                        conv(c, f);
                        f(&mut bn.gamma);
                        f(&mut bn.beta);
                    }
                    conv(&mut b.dw, f);
                    f(&mut b.dw_bn.gamma);
                    f(&mut b.dw_bn.beta);
                    if let Some(se) = &mut b.se {
                        conv(&mut se.reduce, f);
                        conv(&mut se.expand, f);
                    }
                    conv(&mut b.project, f);
                    f(&mut b.project_bn.gamma);
                    f(&mut b.project_bn.beta);
                }
                Block::Bottleneck(b) => {
                    conv(&mut b.conv1, f);
                    f(&mut b.bn1.gamma);
                    f(&mut b.bn1.beta);
                    conv(&mut b.conv2, f);
                    f(&mut b.bn2.gamma);
                    f(&mut b.bn2.beta);
                    conv(&mut b.conv3, f);
                    f(&mut b.bn3.gamma);
                    f(&mut b.bn3.beta);
                    if let Some((c, bn)) = &mut b.shortcut {
                        conv(c, f);
                        f(&mut bn.gamma);
                        f(&mut bn.beta);
                    }
                }
                Block::ConvBnAct(b) => {
                    conv(&mut b.conv, f);
                    f(&mut b.bn.gamma);
                    f(&mut b.bn.beta);
                }
            }
        }
        if let Some((c, bn, _)) = &mut self.head.conv {
            conv(c, f);
            f(&mut bn.gamma);
            f(&mut bn.beta);
        }
        f(&mut self.head.fc.weight);
        f(&mut self.head.fc.bias);
    }

    /// Visit every serialized tensor (parameters and batch-norm running
    /// statistics) in declaration order.
    pub fn visit_state(&mut self, mut f: impl FnMut(&mut Tensor<T>)) {
        if let Some(front) = &mut self.front {
            front.visit_params(&mut |p| f(&mut p.value));
        }
        let visit_bn = |bn: &mut BatchNorm2d<T>, f: &mut dyn FnMut(&mut Tensor<T>)| {
            f(&mut bn.gamma.value);
            f(&mut bn.beta.value);
            f(&mut bn.running_mean);
            f(&mut bn.running_var);
        };
        let conv = |c: &mut Conv2d<T>, f: &mut dyn FnMut(&mut Tensor<T>)| {
            f(&mut c.weight.value);
            if let Some(b) = &mut c.bias {
                f(&mut b.value);
            }
        };
        for block in &mut self.blocks {
            match block {
                Block::MbConv(b) => {
                    if let Some((c, bn, _)) = &mut b.expand {
                        conv(c, &mut f);
                        visit_bn(bn, &mut f);
                    }
                    conv(&mut b.dw, &mut f);
                    visit_bn(&mut b.dw_bn, &mut f);
                    if let Some(se) = &mut b.se {
                        conv(&mut se.reduce, &mut f);
                        conv(&mut se.expand, &mut f);
                    }
                    conv(&mut b.project, &mut f);
                    visit_bn(&mut b.project_bn, &mut f);
                }
                Block::Bottleneck(b) => {
                    conv(&mut b.conv1, &mut f);
                    visit_bn(&mut b.bn1, &mut f);
                    conv(&mut b.conv2, &mut f);
                    visit_bn(&mut b.bn2, &mut f);
                    conv(&mut b.conv3, &mut f);
                    visit_bn(&mut b.bn3, &mut f);
                    if let Some((c, bn)) = &mut b.shortcut {
                        conv(c, &mut f);
                        visit_bn(bn, &mut f);
                    }
                }
                Block::ConvBnAct(b) => {
                    conv(&mut b.conv, &mut f);
                    visit_bn(&mut b.bn, &mut f);
                }
            }
        }
        if let Some((c, bn, _)) = &mut self.head.conv {
            conv(c, &mut f);
            visit_bn(bn, &mut f);
        }
        f(&mut self.head.fc.weight.value);
        f(&mut self.head.fc.bias.value);
    }

    /// Trainable-parameter count of the instantiated body (front excluded,
    /// matching the accounting contract).
    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_body_params(&mut |p| n += p.len());
        n
    }

    pub fn zero_grads(&mut self) {
        self.visit_params(|p| p.zero_grad());
    }

    /// Freeze everything except the front (learnable-transform training).
    pub fn freeze_all_but_front(&mut self) {
        self.visit_body_params(&mut |p| p.trainable = false);
    }

    pub fn set_all_trainable(&mut self) {
        self.visit_params(|p| p.trainable = true);
    }

    /// Native RGB input size implied by the stage table.
    pub fn native_image_hw(&self) -> (usize, usize) {
        (self.spec.input.0 * 8, self.spec.input.1 * 8)
    }

    pub fn has_front(&self) -> bool {
        self.front.is_some()
    }
}

/// Convert a batch of frequency tensors into an N×C×H×W activation tensor,
/// verifying consistent shapes.
pub fn dct_batch<T: Scalar>(tensors: &[&crate::dct::DctTensor]) -> Result<Tensor<T>> {
    let first = tensors.first().ok_or_else(|| Error::Dimension("empty batch".into()))?;
    let (c, gh, gw) = (first.channels(), first.grid_h, first.grid_w);
    let mut out = Tensor::zeros(&[tensors.len(), c, gh, gw]);
    for (ni, t) in tensors.iter().enumerate() {
        if t.channels() != c || t.grid_h != gh || t.grid_w != gw {
            return Err(Error::Dimension("inconsistent tensor shapes in batch".into()));
        }
        for (dst, &src) in out.data_mut()[ni * c * gh * gw..(ni + 1) * c * gh * gw]
            .iter_mut()
            .zip(t.data.iter())
        {
            *dst = T::from_f(src as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch;

    #[test]
    fn instantiated_parameter_total_matches_accounting() {
        for name in ["efun", "efun-variant-b", "resfun", "micro"] {
            let spec = arch::by_name(name).unwrap();
            let mut model = instantiate::<f32>(&spec, 1).unwrap();
            assert_eq!(
                model.param_count(),
                arch::count_params(&spec),
                "accounting mismatch for {name}"
            );
        }
    }

    #[test]
    fn same_seed_means_identical_parameters() {
        let spec = arch::by_name("micro").unwrap().with_classes(4);
        let mut a = instantiate::<f32>(&spec, 42).unwrap();
        let mut b = instantiate::<f32>(&spec, 42).unwrap();
        let mut va = Vec::new();
        a.visit_state(|t| va.extend_from_slice(t.data()));
        let mut vb = Vec::new();
        b.visit_state(|t| vb.extend_from_slice(t.data()));
        assert_eq!(va, vb);

        let mut c = instantiate::<f32>(&spec, 43).unwrap();
        let mut vc = Vec::new();
        c.visit_state(|t| vc.extend_from_slice(t.data()));
        assert_ne!(va, vc);
    }

    #[test]
    fn forward_shape_is_batch_by_classes() {
        let spec = arch::by_name("micro").unwrap().with_classes(4);
        let model = instantiate::<f32>(&spec, 7).unwrap();
        let x = Tensor::zeros(&[2, 192, 28, 28]);
        let y = model.forward_eval(ModelInput::Dct(&x));
        assert_eq!(y.dims(), &[2, 4]);
    }

    #[test]
    fn skip_rule_follows_stride_and_width() {
        let spec = arch::efun_base();
        let model = instantiate::<f32>(&spec, 0).unwrap();
        let skips: Vec<bool> = model
            .blocks
            .iter()
            .map(|b| match b {
                Block::MbConv(m) => m.skip,
                _ => unreachable!(),
            })
            .collect();
        // blocks: 192→128 s1, 128→128 s1 ×2, 128→128 s2, 128→160 s1,
        //         160→160 s1 ×2, 160→192 s2
        assert_eq!(skips, vec![false, true, true, false, false, true, true, false]);
    }
}
