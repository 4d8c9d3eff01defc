//! Declarative architecture tables, compound scaling, and exact
//! parameter/MAC accounting for the FUN model family.
//!
//! Accounting conventions: convolutions count k²·Cin/groups·Cout weights (no
//! bias inside blocks), batch norm counts its affine pair, squeeze-excite
//! counts two biased 1×1 convolutions, and the classifier counts in·out+out.
//! Compute is reported as multiply-accumulates; batch norm and activations
//! are excluded, squeeze-excite and pooling are included.

use crate::error::{Error, Result};
use crate::nn::Activation;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Operator {
    /// Inverted residual: expand 1×1 → depthwise → (SE) → project 1×1.
    MbConv,
    /// ResNet bottleneck: 1×1 reduce → 3×3 → 1×1 expand, ReLU, projection
    /// shortcut when the shape changes.
    Bottleneck,
    /// Plain convolution + batch norm + activation.
    ConvBnAct(Activation),
}

/// One stage row: the block template plus how the stage behaves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSpec {
    pub op: Operator,
    /// MbConv: mid = expansion·Cin. Bottleneck: out = expansion·inner.
    pub expansion: usize,
    pub kernel: usize,
    pub stride: usize,
    pub out_channels: usize,
    /// Squeeze-excite reduction as a fraction of block input channels; 0 disables.
    pub se_ratio: f64,
}

impl BlockSpec {
    pub fn mbconv(expansion: usize, kernel: usize, stride: usize, out: usize, se: f64) -> Self {
        BlockSpec { op: Operator::MbConv, expansion, kernel, stride, out_channels: out, se_ratio: se }
    }

    /// Reduced width used by the squeeze-excite gate for a given block input.
    pub fn se_width(&self, cin: usize) -> usize {
        ((self.se_ratio * cin as f64).round() as usize).max(1)
    }

    /// Skip connection rule: identity residual iff stride 1 and matching widths.
    pub fn has_skip(&self, cin: usize) -> bool {
        match self.op {
            Operator::MbConv => self.stride == 1 && cin == self.out_channels,
            // bottlenecks always carry a residual (projection shortcut otherwise)
            Operator::Bottleneck => true,
            Operator::ConvBnAct(_) => false,
        }
    }

    fn validate(&self) -> Result<()> {
        if !matches!(self.stride, 1 | 2) {
            return Err(Error::Config(format!("stride {} not in {{1, 2}}", self.stride)));
        }
        if self.expansion < 1 {
            return Err(Error::Config("expansion must be >= 1".into()));
        }
        if matches!(self.op, Operator::MbConv) && !matches!(self.kernel, 3 | 5) {
            return Err(Error::Config(format!("MBConv kernel {} not in {{3, 5}}", self.kernel)));
        }
        Ok(())
    }
}

/// Declarative stage table for any FUN model.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub name: String,
    /// (grid_h, grid_w, channels) of the frequency-domain input.
    pub input: (usize, usize, usize),
    /// (block template, repeats); the first block of a stage carries the
    /// stage stride, remaining repeats use stride 1.
    pub stages: Vec<(BlockSpec, usize)>,
    /// Width of the 1×1 head convolution; 0 means pool straight into the classifier.
    pub head_width: usize,
    pub num_classes: usize,
}

impl ArchSpec {
    pub fn validate(&self) -> Result<()> {
        let (mut h, mut w) = (self.input.0, self.input.1);
        for (block, repeats) in &self.stages {
            block.validate()?;
            if *repeats == 0 {
                return Err(Error::Config("stage with zero repeats".into()));
            }
            if block.stride == 2 {
                h = (h + 1) / 2;
                w = (w + 1) / 2;
            }
            if h == 0 || w == 0 {
                return Err(Error::Config("spatial size collapsed to zero".into()));
            }
        }
        Ok(())
    }

    pub fn with_classes(mut self, num_classes: usize) -> Self {
        self.num_classes = num_classes;
        self
    }

    /// Total block count across stages.
    pub fn num_blocks(&self) -> usize {
        self.stages.iter().map(|(_, r)| r).sum()
    }

    /// Per-block (template, cin, stride) sequence with stage strides unrolled.
    pub fn blocks(&self) -> Vec<(BlockSpec, usize)> {
        let mut out = Vec::with_capacity(self.num_blocks());
        let mut cin = self.input.2;
        for (block, repeats) in &self.stages {
            for i in 0..*repeats {
                let mut b = *block;
                if i > 0 {
                    b.stride = 1;
                }
                out.push((b, cin));
                cin = b.out_channels;
            }
        }
        out
    }

    fn last_width(&self) -> usize {
        self.stages.last().map(|(b, _)| b.out_channels).unwrap_or(self.input.2)
    }
}

/// Compound-scaling bases: depth α, width β, resolution γ, exponent φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleCoeffs {
    pub phi: i32,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ScaleCoeffs {
    pub fn new(phi: i32) -> Self {
        ScaleCoeffs { phi, alpha: 1.2, beta: 1.1, gamma: 1.15 }
    }
}

/// Nearest multiple of 8, floored at 8.
pub fn round_to_multiple_of_8(v: f64) -> usize {
    (((v + 4.0) as usize) / 8 * 8).max(8)
}

/// Baseline eFUN: the 28×28-and-deeper portion of the MBConv family adapted
/// to the 192-channel frequency input, with the first two stage widths at
/// 128 and 160. The leading block consumes the raw coefficient stack and
/// carries no squeeze-excite gate.
pub fn efun_base() -> ArchSpec {
    ArchSpec {
        name: "efun".into(),
        input: (28, 28, 192),
        stages: vec![
            (BlockSpec::mbconv(6, 3, 1, 128, 0.0), 1),
            (BlockSpec::mbconv(6, 3, 1, 128, 0.25), 2),
            (BlockSpec::mbconv(6, 3, 2, 128, 0.25), 1),
            (BlockSpec::mbconv(6, 5, 1, 160, 0.25), 3),
            (BlockSpec::mbconv(6, 5, 2, 192, 0.25), 1),
        ],
        head_width: 1280,
        num_classes: 1000,
    }
}

/// Ablation variant A: the reference MBConv table with the stem removed and
/// early strides flattened so every stage up to the 80-wide one runs at 28×28.
pub fn efun_variant_a() -> ArchSpec {
    ArchSpec {
        name: "efun-variant-a".into(),
        input: (28, 28, 192),
        stages: vec![
            (BlockSpec::mbconv(1, 3, 1, 16, 0.25), 1),
            (BlockSpec::mbconv(6, 3, 1, 24, 0.25), 2),
            (BlockSpec::mbconv(6, 5, 1, 40, 0.25), 2),
            (BlockSpec::mbconv(6, 3, 2, 80, 0.25), 3),
            (BlockSpec::mbconv(6, 5, 1, 112, 0.25), 3),
            (BlockSpec::mbconv(6, 5, 2, 192, 0.25), 4),
            (BlockSpec::mbconv(6, 3, 1, 320, 0.25), 1),
        ],
        head_width: 1280,
        num_classes: 1000,
    }
}

/// Ablation variant B: frequency input fed straight into the 28×28 stage of
/// the reference table, keeping the remaining stages unchanged.
pub fn efun_variant_b() -> ArchSpec {
    ArchSpec {
        name: "efun-variant-b".into(),
        input: (28, 28, 192),
        stages: vec![
            (BlockSpec::mbconv(6, 3, 2, 80, 0.25), 3),
            (BlockSpec::mbconv(6, 5, 1, 112, 0.25), 3),
            (BlockSpec::mbconv(6, 5, 2, 192, 0.25), 4),
            (BlockSpec::mbconv(6, 3, 1, 320, 0.25), 1),
        ],
        head_width: 1280,
        num_classes: 1000,
    }
}

/// ResFUN: a 1×1 stem adapting the 192 coefficient channels, then three
/// bottleneck stages patterned on the 28/14/7 tail of ResNet-50 with stage
/// widths reduced to 512/768/1024.
pub fn resfun() -> ArchSpec {
    let bottleneck = |stride: usize, out: usize| BlockSpec {
        op: Operator::Bottleneck,
        expansion: 4,
        kernel: 3,
        stride,
        out_channels: out,
        se_ratio: 0.0,
    };
    ArchSpec {
        name: "resfun".into(),
        input: (28, 28, 192),
        stages: vec![
            (
                BlockSpec {
                    op: Operator::ConvBnAct(Activation::Relu),
                    expansion: 1,
                    kernel: 1,
                    stride: 1,
                    out_channels: 256,
                    se_ratio: 0.0,
                },
                1,
            ),
            (bottleneck(1, 512), 4),
            (bottleneck(2, 768), 6),
            (bottleneck(2, 1024), 3),
        ],
        head_width: 0,
        num_classes: 1000,
    }
}

/// Scale a base table: repeats ← max(1, round(r·α^φ)), widths ← nearest
/// multiple of 8 of w·β^φ (min 8), input grid ← round(g·γ^φ) forced even so
/// the source RGB image stays a multiple of 16.
pub fn compound_scale(base: &ArchSpec, coeffs: ScaleCoeffs) -> Result<ArchSpec> {
    if coeffs.phi == 0 {
        return Ok(base.clone());
    }
    let af = coeffs.alpha.powi(coeffs.phi);
    let bf = coeffs.beta.powi(coeffs.phi);
    let gf = coeffs.gamma.powi(coeffs.phi);

    let scale_grid = |g: usize| -> Result<usize> {
        let exact = g as f64 * gf;
        let mut r = exact.round() as i64;
        if r % 2 != 0 {
            // choose the even neighbor closer to the exact value, ties upward
            r = if (exact - (r - 1) as f64) < ((r + 1) as f64 - exact) { r - 1 } else { r + 1 };
        }
        if r < 2 {
            return Err(Error::Config(format!(
                "degenerate scale: grid side {g} collapses at phi {}",
                coeffs.phi
            )));
        }
        Ok(r as usize)
    };

    let mut stages = Vec::with_capacity(base.stages.len());
    for (block, repeats) in &base.stages {
        let exact_w = block.out_channels as f64 * bf;
        if exact_w < 1.0 {
            return Err(Error::Config(format!(
                "degenerate scale: width {} collapses at phi {}",
                block.out_channels, coeffs.phi
            )));
        }
        let mut b = *block;
        b.out_channels = round_to_multiple_of_8(exact_w);
        let r = ((*repeats as f64 * af).round() as usize).max(1);
        stages.push((b, r));
    }
    let head_width =
        if base.head_width == 0 { 0 } else { round_to_multiple_of_8(base.head_width as f64 * bf) };
    let spec = ArchSpec {
        name: format!("{}@phi{:+}", base.name, coeffs.phi),
        input: (scale_grid(base.input.0)?, scale_grid(base.input.1)?, base.input.2),
        stages,
        head_width,
        num_classes: base.num_classes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Look up a named architecture from the family.
pub fn by_name(name: &str) -> Result<ArchSpec> {
    let scaled = |phi: i32, label: &str| {
        compound_scale(&efun_base(), ScaleCoeffs::new(phi)).map(|mut s| {
            s.name = label.into();
            s
        })
    };
    match name {
        "efun" => Ok(efun_base()),
        "efun-l" => scaled(1, "efun-l"),
        "efun-s" => scaled(-1, "efun-s"),
        "efun-s+" => scaled(-2, "efun-s+"),
        "micro" => scaled(-8, "micro"),
        "efun-variant-a" => Ok(efun_variant_a()),
        "efun-variant-b" => Ok(efun_variant_b()),
        "resfun" => Ok(resfun()),
        _ => Err(Error::Config(format!(
            "unknown architecture {name:?}; known: efun-s+, efun-s, efun, efun-l, \
             efun-variant-a, efun-variant-b, resfun, micro"
        ))),
    }
}

pub const NAMED_ARCHS: [&str; 8] =
    ["efun-s+", "efun-s", "efun", "efun-l", "efun-variant-a", "efun-variant-b", "resfun", "micro"];

/// Trainable parameters of a single block at the given input width.
pub fn block_params(block: &BlockSpec, cin: usize) -> usize {
    let k2 = block.kernel * block.kernel;
    let cout = block.out_channels;
    match block.op {
        Operator::MbConv => {
            let cmid = block.expansion * cin;
            let mut p = 0;
            if block.expansion != 1 {
                p += cin * cmid + 2 * cmid;
            }
            p += k2 * cmid + 2 * cmid;
            if block.se_ratio > 0.0 {
                let cse = block.se_width(cin);
                p += cmid * cse + cse + cse * cmid + cmid;
            }
            p + cmid * cout + 2 * cout
        }
        Operator::Bottleneck => {
            let inner = cout / block.expansion;
            let mut p = cin * inner + 2 * inner;
            p += k2 * inner * inner + 2 * inner;
            p += inner * cout + 2 * cout;
            if block.stride != 1 || cin != cout {
                p += cin * cout + 2 * cout;
            }
            p
        }
        Operator::ConvBnAct(_) => k2 * cin * cout + 2 * cout,
    }
}

/// Exact trainable-parameter count of the whole table, classifier included.
pub fn count_params(spec: &ArchSpec) -> usize {
    let mut p = 0;
    for (block, cin) in spec.blocks() {
        p += block_params(&block, cin);
    }
    let mut feat = spec.last_width();
    if spec.head_width > 0 {
        p += feat * spec.head_width + 2 * spec.head_width;
        feat = spec.head_width;
    }
    p + feat * spec.num_classes + spec.num_classes
}

fn conv_out(side: usize, kernel: usize, stride: usize) -> usize {
    // symmetric zero padding of kernel/2
    (side + 2 * (kernel / 2) - kernel) / stride + 1
}

fn block_macs(block: &BlockSpec, cin: usize, h: usize, w: usize) -> (usize, usize, usize) {
    let k2 = block.kernel * block.kernel;
    let cout = block.out_channels;
    let (oh, ow) = (conv_out(h, block.kernel, block.stride), conv_out(w, block.kernel, block.stride));
    let macs = match block.op {
        Operator::MbConv => {
            let cmid = block.expansion * cin;
            let mut m = 0;
            if block.expansion != 1 {
                m += h * w * cmid * cin;
            }
            m += oh * ow * cmid * k2;
            if block.se_ratio > 0.0 {
                let cse = block.se_width(cin);
                m += oh * ow * cmid // pool
                    + cmid * cse
                    + cse * cmid
                    + oh * ow * cmid; // channel scale
            }
            m + oh * ow * cout * cmid
        }
        Operator::Bottleneck => {
            let inner = cout / block.expansion;
            // stride lives on the 3×3, the 1×1s run at input/output resolution
            let mut m = h * w * inner * cin;
            m += oh * ow * inner * (k2 * inner);
            m += oh * ow * cout * inner;
            if block.stride != 1 || cin != cout {
                m += oh * ow * cout * cin;
            }
            m
        }
        Operator::ConvBnAct(_) => oh * ow * cout * (k2 * cin),
    };
    (macs, oh, ow)
}

/// Multiply-accumulate count at the given spatial input size (the paper's
/// FLOP convention).
pub fn count_flops(spec: &ArchSpec, input_hw: (usize, usize)) -> usize {
    let (mut h, mut w) = input_hw;
    let mut m = 0;
    for (block, cin) in spec.blocks() {
        let (bm, oh, ow) = block_macs(&block, cin, h, w);
        m += bm;
        h = oh;
        w = ow;
    }
    let mut feat = spec.last_width();
    if spec.head_width > 0 {
        m += h * w * spec.head_width * feat;
        feat = spec.head_width;
    }
    m += h * w * feat; // global average pool
    m + feat * spec.num_classes
}

// --- text serialization ---

fn op_token(block: &BlockSpec) -> String {
    match block.op {
        Operator::MbConv => format!("mbconv{}", block.expansion),
        Operator::Bottleneck => format!("bottleneck{}", block.expansion),
        Operator::ConvBnAct(Activation::Relu) => "conv-relu".into(),
        Operator::ConvBnAct(Activation::Swish) => "conv-swish".into(),
        Operator::ConvBnAct(Activation::Sigmoid) => "conv-sigmoid".into(),
    }
}

/// Human-readable stage table, one stage per line.
pub fn to_text(spec: &ArchSpec) -> String {
    let mut s = String::new();
    writeln!(s, "fun-arch v1").unwrap();
    writeln!(s, "name {}", spec.name).unwrap();
    writeln!(s, "input {} {} {}", spec.input.0, spec.input.1, spec.input.2).unwrap();
    writeln!(s, "classes {}", spec.num_classes).unwrap();
    for (block, repeats) in &spec.stages {
        writeln!(
            s,
            "stage {} k{} s{} c{} r{} se{}",
            op_token(block),
            block.kernel,
            block.stride,
            block.out_channels,
            repeats,
            block.se_ratio
        )
        .unwrap();
    }
    writeln!(s, "head {}", spec.head_width).unwrap();
    s
}

pub fn from_text(text: &str, origin: &Path) -> Result<ArchSpec> {
    let err = |msg: String| Error::parse(origin, msg);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    match lines.next() {
        Some("fun-arch v1") => {}
        other => return Err(err(format!("bad header line {other:?}"))),
    }
    let mut name = String::new();
    let mut input = None;
    let mut classes = 1000usize;
    let mut stages = Vec::new();
    let mut head = 0usize;
    for line in lines {
        let mut it = line.split_whitespace();
        let key = it.next().unwrap_or_default();
        let rest: Vec<&str> = it.collect();
        let parse = |v: &str| -> Result<usize> {
            v.parse::<usize>().map_err(|_| err(format!("bad number {v:?} in line {line:?}")))
        };
        match key {
            "name" => name = rest.join(" "),
            "input" => {
                if rest.len() != 3 {
                    return Err(err(format!("input needs 3 fields: {line:?}")));
                }
                input = Some((parse(rest[0])?, parse(rest[1])?, parse(rest[2])?));
            }
            "classes" => classes = parse(rest.first().copied().unwrap_or(""))?,
            "head" => head = parse(rest.first().copied().unwrap_or(""))?,
            "stage" => {
                if rest.len() < 5 {
                    return Err(err(format!("stage needs at least 5 fields: {line:?}")));
                }
                let field = |prefix: &str, v: &str| -> Result<usize> {
                    v.strip_prefix(prefix)
                        .ok_or_else(|| err(format!("expected {prefix}<n>, got {v:?}")))
                        .and_then(parse)
                };
                let (op, expansion) = if let Some(e) = rest[0].strip_prefix("mbconv") {
                    (Operator::MbConv, parse(e)?)
                } else if let Some(e) = rest[0].strip_prefix("bottleneck") {
                    (Operator::Bottleneck, parse(e)?)
                } else {
                    match rest[0] {
                        "conv-relu" => (Operator::ConvBnAct(Activation::Relu), 1),
                        "conv-swish" => (Operator::ConvBnAct(Activation::Swish), 1),
                        other => return Err(err(format!("unknown operator {other:?}"))),
                    }
                };
                let kernel = field("k", rest[1])?;
                let stride = field("s", rest[2])?;
                let out = field("c", rest[3])?;
                let repeats = field("r", rest[4])?;
                let se_ratio = match rest.get(5) {
                    Some(v) => v
                        .strip_prefix("se")
                        .and_then(|s| s.parse::<f64>().ok())
                        .ok_or_else(|| err(format!("bad se field {v:?}")))?,
                    None => {
                        if matches!(op, Operator::MbConv) {
                            0.25
                        } else {
                            0.0
                        }
                    }
                };
                stages.push((
                    BlockSpec { op, expansion, kernel, stride, out_channels: out, se_ratio },
                    repeats,
                ));
            }
            other => return Err(err(format!("unknown directive {other:?}"))),
        }
    }
    let input = input.ok_or_else(|| err("missing input line".into()))?;
    let spec = ArchSpec {
        name: if name.is_empty() { "custom".into() } else { name },
        input,
        stages,
        head_width: head,
        num_classes: classes,
    };
    spec.validate()?;
    Ok(spec)
}

pub fn load_spec(path: &Path) -> Result<ArchSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_parameter_counts_are_frozen() {
        assert_eq!(count_params(&efun_base()), 4_247_584);
        assert_eq!(count_params(&efun_variant_a()), 5_310_060);
        assert_eq!(count_params(&efun_variant_b()), 5_625_960);
        assert_eq!(count_params(&resfun()), 10_488_296);
        assert_eq!(count_params(&by_name("efun-l").unwrap()), 5_463_112);
    }

    #[test]
    fn family_mac_counts_are_frozen() {
        assert_eq!(count_flops(&efun_base(), (28, 28)), 948_882_496);
        let l = by_name("efun-l").unwrap();
        assert_eq!(l.input.0, 32, "phi=1 grid 28 → 32");
        assert_eq!(count_flops(&l, (32, 32)), 1_566_182_400);
    }

    #[test]
    fn single_conv_examples() {
        let conv = BlockSpec {
            op: Operator::ConvBnAct(Activation::Swish),
            expansion: 1,
            kernel: 3,
            stride: 1,
            out_channels: 8,
            se_ratio: 0.0,
        };
        // 9·3·8 weights, plus the affine BN pair
        assert_eq!(block_params(&conv, 3), 216 + 16);
        let (m, _, _) = block_macs(
            &BlockSpec {
                op: Operator::ConvBnAct(Activation::Swish),
                expansion: 1,
                kernel: 3,
                stride: 1,
                out_channels: 16,
                se_ratio: 0.0,
            },
            8,
            28,
            28,
        );
        assert_eq!(m, 28 * 28 * 16 * 8 * 9);
    }

    #[test]
    fn pointwise_conv_mac_example() {
        let b = BlockSpec {
            op: Operator::ConvBnAct(Activation::Swish),
            expansion: 1,
            kernel: 1,
            stride: 1,
            out_channels: 1152,
            se_ratio: 0.0,
        };
        assert_eq!(block_macs(&b, 192, 28, 28).0, 173_408_256);
    }

    #[test]
    fn scaling_identity_and_monotonicity() {
        let base = efun_base();
        assert_eq!(compound_scale(&base, ScaleCoeffs::new(0)).unwrap(), base);

        let up = compound_scale(&base, ScaleCoeffs::new(1)).unwrap();
        let down = compound_scale(&base, ScaleCoeffs::new(-1)).unwrap();
        for (i, (b, r)) in base.stages.iter().enumerate() {
            assert!(up.stages[i].0.out_channels >= b.out_channels);
            assert!(up.stages[i].1 >= *r);
            assert!(down.stages[i].0.out_channels <= b.out_channels);
            assert!(down.stages[i].1 <= *r);
        }
        // depth example: a 3-repeat stage grows to 4 at phi = 1
        assert_eq!(up.stages[3].1, 4);
    }

    #[test]
    fn efun_resolution_flow_ends_at_7x7() {
        let spec = efun_base();
        let (mut h, mut w) = (spec.input.0, spec.input.1);
        for (block, _) in spec.blocks() {
            let (_, oh, ow) = block_macs(&block, 1, h, w);
            h = oh;
            w = ow;
        }
        assert_eq!((h, w), (7, 7));
        assert_eq!(spec.num_blocks(), 8);
    }

    #[test]
    fn resfun_stage_widths_match_narrative() {
        let spec = resfun();
        let widths: Vec<usize> =
            spec.stages.iter().skip(1).map(|(b, _)| b.out_channels).collect();
        assert_eq!(widths, vec![512, 768, 1024]);
        let reps: Vec<usize> = spec.stages.iter().skip(1).map(|(_, r)| *r).collect();
        assert_eq!(reps, vec![4, 6, 3]);
    }

    #[test]
    fn variant_a_has_eight_stages_including_head() {
        // seven MBConv stage rows plus the head row of the published table
        assert_eq!(efun_variant_a().stages.len(), 7);
        assert_eq!(efun_variant_a().head_width, 1280);
    }

    #[test]
    fn text_round_trip_preserves_spec() {
        for name in NAMED_ARCHS {
            let spec = by_name(name).unwrap();
            let text = to_text(&spec);
            let back = from_text(&text, Path::new("<mem>")).unwrap();
            assert_eq!(back, spec, "{name}");
        }
    }

    #[test]
    fn unknown_name_is_a_config_error() {
        assert!(matches!(by_name("efun-xxl"), Err(Error::Config(_))));
    }
}
