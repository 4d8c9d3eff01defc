//! Toy-scale training and evaluation harness.
//!
//! Randomness comes from one seeded ChaCha stream consumed in a documented
//! order: the epoch shuffle first, then per batch the stochastic-depth draws
//! in block order. Identical configs therefore produce bit-identical logs.

use crate::compress::mask_channels;
use crate::dct::{preprocess, rgb_to_ycbcr, CompressionSpec, DctTensor};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::model::{dct_batch, Model, ModelInput, PlanesBatch};
use crate::nn::{softmax_cross_entropy, Optimizer, OptimizerKind};
use crate::tensor::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use std::fmt::Write as _;
use std::path::PathBuf;

/// Learning-rate schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    /// lr0 · decay^⌊epoch / epochs_per_decay⌋
    ExpDecay { lr0: f64, decay: f64, epochs_per_decay: f64 },
    /// Piecewise-constant steps: (epoch count, lr) segments.
    Steps(Vec<(usize, f64)>),
}

impl Schedule {
    pub fn lr_at(&self, epoch: usize) -> f64 {
        match self {
            Schedule::ExpDecay { lr0, decay, epochs_per_decay } => {
                crate::nn::lr_schedule(epoch as f64, *epochs_per_decay, *decay, *lr0)
            }
            Schedule::Steps(steps) => {
                let mut e = epoch;
                for (span, lr) in steps {
                    if e < *span {
                        return *lr;
                    }
                    e -= span;
                }
                steps.last().map(|(_, lr)| *lr).unwrap_or(0.0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub schedule: Schedule,
    pub weight_decay: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub stochastic_depth_max: f64,
    pub seed: u64,
    /// Train-time truncation spec (64/64/64 keeps the full stack).
    pub keep: CompressionSpec,
    /// Directory for the content-addressed FDT1 preprocessing cache.
    pub cache_dir: Option<PathBuf>,
    /// Recompute per-channel input statistics from the train split. Off for
    /// learnable-front runs, which reuse the base model's statistics.
    pub recompute_norm: bool,
    /// Stop once test top-1 reaches this value.
    pub target_test_top1: Option<f64>,
}

impl TrainConfig {
    /// The MBConv-family recipe: RMSProp (decay 0.9, momentum 0.9), weight
    /// decay 1e-5, lr 0.048 decayed by 0.97 every 2.4 epochs, stochastic
    /// depth up to 0.2.
    pub fn efun(epochs: usize, seed: u64) -> Self {
        TrainConfig {
            optimizer: OptimizerKind::RmsProp { decay: 0.9, momentum: 0.9, eps: 1e-3 },
            schedule: Schedule::ExpDecay { lr0: 0.048, decay: 0.97, epochs_per_decay: 2.4 },
            weight_decay: 1e-5,
            epochs,
            batch_size: 32,
            stochastic_depth_max: 0.2,
            seed,
            keep: CompressionSpec::FULL,
            cache_dir: None,
            recompute_norm: true,
            target_test_top1: None,
        }
    }

    /// The residual-family recipe: SGD with momentum 0.9 at 0.1/0.01/0.001
    /// over 90/20/20 epochs.
    pub fn resfun(seed: u64) -> Self {
        TrainConfig {
            optimizer: OptimizerKind::SgdMomentum { momentum: 0.9 },
            schedule: Schedule::Steps(vec![(90, 0.1), (20, 0.01), (20, 0.001)]),
            weight_decay: 1e-5,
            epochs: 130,
            batch_size: 32,
            stochastic_depth_max: 0.0,
            seed,
            keep: CompressionSpec::FULL,
            cache_dir: None,
            recompute_norm: true,
            target_test_top1: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_top1: f64,
    pub test_top1: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
}

impl TrainLog {
    /// One epoch per line: epoch, lr, train_loss, train_top1, test_top1.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for r in &self.epochs {
            writeln!(
                s,
                "{} {} {} {} {}",
                r.epoch, r.lr, r.train_loss, r.train_top1, r.test_top1
            )
            .unwrap();
        }
        s
    }

    pub fn final_test_top1(&self) -> Option<f64> {
        self.epochs.last().map(|r| r.test_top1)
    }

    pub fn best_test_top1(&self) -> Option<f64> {
        self.epochs.iter().map(|r| r.test_top1).fold(None, |a: Option<f64>, v| {
            Some(a.map_or(v, |x| x.max(v)))
        })
    }
}

/// Preprocessed dataset ready for batching: frequency tensors (and raw
/// planes when a learnable front consumes them).
pub struct Prepared {
    pub tensors: Vec<DctTensor>,
    pub planes: Option<Vec<(Tensor<f32>, Tensor<f32>, Tensor<f32>)>>,
    pub labels: Vec<usize>,
}

fn fnv128_hex(bytes: &[u8], salt: u64) -> String {
    let mut h1: u64 = 0xcbf29ce484222325 ^ salt;
    let mut h2: u64 = 0x9e3779b97f4a7c15 ^ salt.rotate_left(17);
    for &b in bytes {
        h1 = (h1 ^ b as u64).wrapping_mul(0x100000001b3);
        h2 = (h2 ^ b as u64).wrapping_mul(0x100000001b5);
    }
    format!("{h1:016x}{h2:016x}")
}

/// Resize to the model's native input size, run the codec (through the FDT1
/// cache when one is configured), and optionally keep YCbCr planes.
pub fn prepare(
    dataset: &Dataset,
    native_hw: (usize, usize),
    keep: CompressionSpec,
    cache_dir: Option<&PathBuf>,
    want_planes: bool,
) -> Result<Prepared> {
    if dataset.is_empty() {
        return Err(Error::Dataset("empty dataset".into()));
    }
    if let Some(dir) = cache_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut tensors = Vec::with_capacity(dataset.len());
    let mut planes = want_planes.then(Vec::new);
    for item in &dataset.items {
        let img = item.image.resize(native_hw.0, native_hw.1)?;
        let key = format!("{}x{}-{}", native_hw.0, native_hw.1, keep);
        let tensor = match cache_dir {
            Some(dir) => {
                let name =
                    format!("{}-{}.fdt1", fnv128_hex(img.data(), 0), fnv128_hex(key.as_bytes(), 1));
                let path = dir.join(name);
                if path.exists() {
                    crate::dct::load_fdt1(&path)?
                } else {
                    let t = preprocess(&img, keep)?;
                    crate::dct::save_fdt1(&t, &path)?;
                    t
                }
            }
            None => preprocess(&img, keep)?,
        };
        tensors.push(tensor);
        if let Some(p) = planes.as_mut() {
            let ps = rgb_to_ycbcr(&img)?;
            let (h, w) = (ps.height, ps.width);
            let to32 = |v: &[f64], dims: &[usize]| {
                Tensor::from_vec(dims, v.iter().map(|&x| x as f32).collect()).expect("plane dims")
            };
            p.push((
                to32(&ps.y, &[1, 1, h, w]),
                to32(&ps.cb, &[1, 1, h / 2, w / 2]),
                to32(&ps.cr, &[1, 1, h / 2, w / 2]),
            ));
        }
    }
    Ok(Prepared { tensors, planes, labels: dataset.labels() })
}

/// Per-channel mean and standard deviation over a set of tensors. Standard
/// deviations are floored at 1e-6 so constant channels stay finite.
pub fn channel_stats(tensors: &[DctTensor]) -> (Vec<f32>, Vec<f32>) {
    let c = tensors[0].channels();
    let mut sum = vec![0.0f64; c];
    let mut sq = vec![0.0f64; c];
    let mut count = 0usize;
    for t in tensors {
        let hw = t.grid_h * t.grid_w;
        count += hw;
        for ci in 0..c {
            for &v in t.channel(ci) {
                sum[ci] += v as f64;
                sq[ci] += (v as f64) * (v as f64);
            }
        }
    }
    let n = count as f64;
    let mean: Vec<f32> = sum.iter().map(|&s| (s / n) as f32).collect();
    let std: Vec<f32> = sq
        .iter()
        .zip(&mean)
        .map(|(&q, &m)| ((q / n - (m as f64) * (m as f64)).max(0.0).sqrt().max(1e-6)) as f32)
        .collect();
    (mean, std)
}

fn batch_planes(
    planes: &[(Tensor<f32>, Tensor<f32>, Tensor<f32>)],
    idx: &[usize],
) -> PlanesBatch<f32> {
    fn stack<'a>(
        idx: &[usize],
        pick: impl Fn(usize) -> &'a Tensor<f32>,
    ) -> Tensor<f32> {
        let dims = pick(idx[0]).dims();
        let (h, w) = (dims[2], dims[3]);
        let mut t = Tensor::zeros(&[idx.len(), 1, h, w]);
        for (n, &i) in idx.iter().enumerate() {
            t.plane_mut(n, 0).copy_from_slice(pick(i).plane(0, 0));
        }
        t
    }
    PlanesBatch {
        y: stack(idx, |i| &planes[i].0),
        cb: stack(idx, |i| &planes[i].1),
        cr: stack(idx, |i| &planes[i].2),
    }
}

fn batch_tensors(tensors: &[DctTensor], idx: &[usize]) -> Result<Tensor<f32>> {
    let refs: Vec<&DctTensor> = idx.iter().map(|&i| &tensors[i]).collect();
    dct_batch(&refs)
}

fn top1_count(logits: &Tensor<f32>, labels: &[usize]) -> usize {
    let (n, k) = (logits.dims()[0], logits.dims()[1]);
    let mut hits = 0;
    for ni in 0..n {
        let row = &logits.data()[ni * k..(ni + 1) * k];
        let mut best = 0;
        for j in 1..k {
            if row[j] > row[best] {
                best = j;
            }
        }
        hits += (best == labels[ni]) as usize;
    }
    hits
}

/// Minibatch training loop per the frequency-domain recipe: preprocess
/// (cached), standardize, optimize under the config's schedule, log one line
/// per epoch. Aborts with a divergence error if the loss stops being finite.
pub fn train(
    model: &mut Model<f32>,
    train_ds: &Dataset,
    test_ds: &Dataset,
    config: &TrainConfig,
) -> Result<TrainLog> {
    let native = model.native_image_hw();
    let want_planes = model.has_front();
    let tr = prepare(train_ds, native, config.keep, config.cache_dir.as_ref(), want_planes)?;
    let te = prepare(test_ds, native, config.keep, config.cache_dir.as_ref(), want_planes)?;
    if !want_planes && tr.tensors[0].channels() != model.spec.input.2 {
        return Err(Error::Config(format!(
            "model expects {} input channels, data has {}",
            model.spec.input.2,
            tr.tensors[0].channels()
        )));
    }
    if config.recompute_norm && !want_planes {
        let (mean, std) = channel_stats(&tr.tensors);
        model.norm.mean = mean;
        model.norm.std = std;
    }
    if !want_planes {
        model.keep = config.keep;
    }
    model.set_stochastic_depth(config.stochastic_depth_max);

    let mut log = TrainLog::default();
    if config.epochs == 0 {
        return Ok(log);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut optimizer = Optimizer::new(config.optimizer, config.weight_decay);
    let n = tr.labels.len();
    let mut order: Vec<usize> = (0..n).collect();

    for epoch in 0..config.epochs {
        let lr = config.schedule.lr_at(epoch);
        // Fisher-Yates, one swap per element, consumed before any batch
        for i in (1..n).rev() {
            let j = rng.gen_range(0..=i);
            order.swap(i, j);
        }
        let mut loss_sum = 0.0f64;
        let mut hits = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let labels: Vec<usize> = chunk.iter().map(|&i| tr.labels[i]).collect();
            let logits = if want_planes {
                let batch = batch_planes(tr.planes.as_ref().unwrap(), chunk);
                model.forward_train(ModelInput::Planes(&batch), &mut rng)
            } else {
                let batch = batch_tensors(&tr.tensors, chunk)?;
                model.forward_train(ModelInput::Dct(&batch), &mut rng)
            };
            let (loss, grad) = softmax_cross_entropy(&logits, &labels);
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss at epoch {epoch} (lr {lr})"
                )));
            }
            hits += top1_count(&logits, &labels);
            loss_sum += loss as f64 * labels.len() as f64;
            model.backward(&grad);
            let mut idx = 0;
            model.visit_params(|p| {
                optimizer.step_param(idx, p, lr);
                idx += 1;
            });
            model.zero_grads();
        }
        let test_top1 = evaluate_prepared(model, &te, CompressionSpec::FULL)?;
        log.epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / n as f64,
            train_top1: hits as f64 / n as f64,
            test_top1,
        });
        if config.target_test_top1.is_some_and(|t| test_top1 >= t) {
            break;
        }
    }
    Ok(log)
}

/// Top-1 accuracy over a prepared split, inputs masked per `keep`. Eval mode
/// throughout: parameters and running statistics are untouched.
pub fn evaluate_prepared(
    model: &Model<f32>,
    data: &Prepared,
    keep: CompressionSpec,
) -> Result<f64> {
    let n = data.labels.len();
    let mut hits = 0usize;
    let batch = 32usize;
    let masked: Vec<DctTensor> = if model.has_front() {
        if keep != CompressionSpec::FULL {
            return Err(Error::Config(
                "channel masking applies to the static pipeline, not a learnable front".into(),
            ));
        }
        Vec::new()
    } else if keep == CompressionSpec::FULL {
        Vec::new()
    } else {
        data.tensors.iter().map(|t| mask_channels(t, keep)).collect::<Result<_>>()?
    };
    let tensors = if masked.is_empty() { &data.tensors } else { &masked };
    let idx_all: Vec<usize> = (0..n).collect();
    for chunk in idx_all.chunks(batch) {
        let labels: Vec<usize> = chunk.iter().map(|&i| data.labels[i]).collect();
        let logits = if model.has_front() {
            let b = batch_planes(data.planes.as_ref().unwrap(), chunk);
            model.forward_eval(ModelInput::Planes(&b))
        } else {
            let b = batch_tensors(tensors, chunk)?;
            model.forward_eval(ModelInput::Dct(&b))
        };
        hits += top1_count(&logits, &labels);
    }
    Ok(hits as f64 / n as f64)
}

/// Preprocess a dataset at the model's native size and score it, masked per
/// `keep`. Models trained on truncated inputs are fed their baked spec and
/// accept no further masking.
pub fn evaluate(model: &Model<f32>, dataset: &Dataset, keep: CompressionSpec) -> Result<f64> {
    let native = model.native_image_hw();
    if model.has_front() || model.keep == CompressionSpec::FULL {
        let prepared = prepare(dataset, native, CompressionSpec::FULL, None, model.has_front())?;
        evaluate_prepared(model, &prepared, keep)
    } else {
        if keep != CompressionSpec::FULL && keep != model.keep {
            return Err(Error::Config(format!(
                "model inputs are truncated to {}; cannot mask with {}",
                model.keep, keep
            )));
        }
        let prepared = prepare(dataset, native, model.keep, None, false)?;
        evaluate_prepared(model, &prepared, CompressionSpec::FULL)
    }
}

/// Masked-accuracy sweep over a list of keep-specs, with structural size
/// accounting per row.
pub fn compression_sweep(
    model: &Model<f32>,
    dataset: &Dataset,
    specs: &[CompressionSpec],
) -> Result<Vec<crate::compress::MaskReport>> {
    let prepared = prepare(dataset, model.native_image_hw(), CompressionSpec::FULL, None, false)?;
    let mut out = Vec::with_capacity(specs.len());
    for &spec in specs {
        let accuracy = evaluate_prepared(model, &prepared, spec)?;
        let pruned = crate::compress::pruned_param_count(&model.spec, spec)?;
        out.push(crate::compress::MaskReport {
            spec,
            channels_active: spec.channels(),
            accuracy: Some(accuracy),
            pruned_param_count: pruned,
        });
    }
    Ok(out)
}

/// Learnable-front study relative to a trained static-input model.
#[derive(Debug, Clone)]
pub struct LefunComparison {
    pub static_top1: f64,
    pub frozen_top1: f64,
    pub e2e_top1: f64,
}

impl LefunComparison {
    pub fn to_text(&self) -> String {
        format!(
            "static {}\nfrozen {}\ne2e {}\n",
            self.static_top1, self.frozen_top1, self.e2e_top1
        )
    }
}

/// Which parameters a learnable-front run trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LefunMode {
    /// Train only the attached front; the decoder is frozen (parameters and
    /// batch-norm statistics untouched).
    Frozen,
    /// Train the front and the whole network.
    EndToEnd,
}

/// Attach a randomly-initialized front to a copy of `base` and train it per
/// `mode`. The base model's input statistics are reused unchanged.
pub fn run_lefun(
    base: &Model<f32>,
    mode: LefunMode,
    train_ds: &Dataset,
    test_ds: &Dataset,
    config: &TrainConfig,
) -> Result<(Model<f32>, TrainLog)> {
    let mut model = base.clone();
    model.attach_front(false, config.seed ^ 0x4c65_4655_4e00_0001);
    let mut cfg = config.clone();
    cfg.recompute_norm = false;
    match mode {
        LefunMode::Frozen => {
            model.freeze_all_but_front();
            model.set_bn_momentum(0.0);
            cfg.stochastic_depth_max = 0.0;
        }
        LefunMode::EndToEnd => model.set_all_trainable(),
    }
    let log = train(&mut model, train_ds, test_ds, &cfg)?;
    Ok((model, log))
}

/// Run the full three-way comparison: static baseline, frozen front, and
/// end-to-end front.
pub fn run_lefun_comparison(
    base: &Model<f32>,
    train_ds: &Dataset,
    test_ds: &Dataset,
    config: &TrainConfig,
) -> Result<(LefunComparison, Model<f32>, Model<f32>)> {
    let static_top1 = evaluate(base, test_ds, CompressionSpec::FULL)?;
    let (frozen_model, _) = run_lefun(base, LefunMode::Frozen, train_ds, test_ds, config)?;
    let frozen_top1 = evaluate(&frozen_model, test_ds, CompressionSpec::FULL)?;
    let (e2e_model, _) = run_lefun(base, LefunMode::EndToEnd, train_ds, test_ds, config)?;
    let e2e_top1 = evaluate(&e2e_model, test_ds, CompressionSpec::FULL)?;
    Ok((LefunComparison { static_top1, frozen_top1, e2e_top1 }, frozen_model, e2e_model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch;
    use crate::data::synth_freq_dataset;
    use crate::model::instantiate;

    fn tiny_setup() -> (Model<f32>, Dataset, Dataset) {
        // static pipeline at 24 channels keeps the test fast
        let spec = crate::arch::from_text(
            "fun-arch v1\nname tiny\ninput 4 4 24\nclasses 2\n\
             stage mbconv6 k3 s1 c16 r1 se0\nhead 32\n",
            std::path::Path::new("<tiny>"),
        )
        .unwrap();
        let model = instantiate::<f32>(&spec, 5).unwrap();
        let ds = synth_freq_dataset(12, 2, 7).unwrap();
        // shrink images to the model's native 32x32 during prepare()
        let (tr, te) = ds.split_at(8).unwrap();
        (model, tr, te)
    }

    fn tiny_config(epochs: usize) -> TrainConfig {
        let mut c = TrainConfig::efun(epochs, 11);
        c.batch_size = 4;
        c.keep = CompressionSpec::new(14, 5, 5).unwrap();
        c
    }

    #[test]
    fn zero_epochs_changes_nothing() {
        let (mut model, tr, te) = tiny_setup();
        let mut before = Vec::new();
        model.visit_state(|t| before.extend_from_slice(t.data()));
        let log = train(&mut model, &tr, &te, &tiny_config(0)).unwrap();
        assert!(log.epochs.is_empty());
        let mut after = Vec::new();
        model.visit_state(|t| after.extend_from_slice(t.data()));
        assert_eq!(before, after);
    }

    #[test]
    fn identical_seeds_give_identical_logs() {
        let (model, tr, te) = tiny_setup();
        let mut m1 = model.clone();
        let mut m2 = model;
        let l1 = train(&mut m1, &tr, &te, &tiny_config(2)).unwrap();
        let l2 = train(&mut m2, &tr, &te, &tiny_config(2)).unwrap();
        assert_eq!(l1.to_text(), l2.to_text());
        let mut s1 = Vec::new();
        m1.visit_state(|t| s1.extend_from_slice(t.data()));
        let mut s2 = Vec::new();
        m2.visit_state(|t| s2.extend_from_slice(t.data()));
        assert_eq!(s1, s2);
    }

    #[test]
    fn logged_lr_follows_the_schedule_exactly() {
        let (mut model, tr, te) = tiny_setup();
        let mut cfg = tiny_config(6);
        cfg.epochs = 6;
        let log = train(&mut model, &tr, &te, &cfg).unwrap();
        for r in &log.epochs {
            assert_eq!(r.lr, 0.048 * 0.97f64.powi((r.epoch as f64 / 2.4).floor() as i32));
        }
    }

    #[test]
    fn initial_loss_is_near_ln_k() {
        let (mut model, tr, te) = tiny_setup();
        let log = train(&mut model, &tr, &te, &tiny_config(1)).unwrap();
        let ln_k = (2f64).ln();
        let loss = log.epochs[0].train_loss;
        assert!(
            (loss - ln_k).abs() / ln_k < 0.35,
            "first-epoch mean loss {loss} too far from ln 2 = {ln_k}"
        );
    }

    #[test]
    fn evaluation_is_pure_and_deterministic() {
        let (mut model, tr, te) = tiny_setup();
        train(&mut model, &tr, &te, &tiny_config(1)).unwrap();
        let mut before = Vec::new();
        model.visit_state(|t| before.extend_from_slice(t.data()));
        let keep = CompressionSpec::new(14, 5, 5).unwrap();
        let a = evaluate(&model, &te, CompressionSpec::FULL).unwrap();
        let b = evaluate(&model, &te, CompressionSpec::FULL).unwrap();
        assert_eq!(a, b);
        let _ = keep;
        let mut after = Vec::new();
        model.visit_state(|t| after.extend_from_slice(t.data()));
        assert_eq!(before, after, "evaluate must not mutate the model");
    }

    #[test]
    fn step_schedule_segments() {
        let s = Schedule::Steps(vec![(2, 0.1), (3, 0.01), (1, 0.001)]);
        let got: Vec<f64> = (0..8).map(|e| s.lr_at(e)).collect();
        assert_eq!(got, vec![0.1, 0.1, 0.01, 0.01, 0.01, 0.001, 0.001, 0.001]);
    }

    #[test]
    fn micro_arch_native_size_is_80() {
        let spec = arch::by_name("micro").unwrap();
        let model = instantiate::<f32>(&spec, 0).unwrap();
        assert_eq!(model.native_image_hw(), (80, 80));
    }
}
