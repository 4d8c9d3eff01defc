//! Dynamic frequency-channel reduction.
//!
//! Two distinct modes: `mask_channels` zeroes dropped channels and changes
//! nothing else (the function-level operation — no retraining, architecture
//! untouched), while `prune_first_block` rebuilds the input block for the
//! reduced channel count (the structural operation behind the reported model
//! sizes; the rebuilt expansion mixes channels, so pruned models are for size
//! accounting and fine-tuning, not bit-equivalent inference).

use crate::arch::{block_params, count_params, ArchSpec, Operator};
use crate::dct::{CompressionSpec, DctTensor};
use crate::error::{Error, Result};
use crate::model::{Block, MbConvBlock, Model};
use crate::scalar::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// One row of a compression sweep.
#[derive(Debug, Clone)]
pub struct MaskReport {
    pub spec: CompressionSpec,
    pub channels_active: usize,
    pub accuracy: Option<f64>,
    pub pruned_param_count: usize,
}

/// Zero every channel beyond each plane's keep-count; shape unchanged.
pub fn mask_channels(x: &DctTensor, spec: CompressionSpec) -> Result<DctTensor> {
    spec.validate()?;
    if x.channels() != 192 || x.keep != CompressionSpec::FULL {
        return Err(Error::Dimension(format!(
            "mask_channels expects a full 192-channel tensor, got {} ({})",
            x.channels(),
            x.keep
        )));
    }
    let mut out = x.clone();
    let hw = x.grid_h * x.grid_w;
    for (group, keep) in [spec.keep_y, spec.keep_cb, spec.keep_cr].into_iter().enumerate() {
        let start = (group * 64 + keep) * hw;
        let end = (group + 1) * 64 * hw;
        out.data[start..end].fill(0.0);
    }
    Ok(out)
}

/// Indices (into a 192-channel stack) of the channels a spec keeps.
pub fn surviving_channels(spec: CompressionSpec) -> Vec<usize> {
    let mut idx = Vec::with_capacity(spec.channels());
    for (group, keep) in [spec.keep_y, spec.keep_cb, spec.keep_cr].into_iter().enumerate() {
        idx.extend(group * 64..group * 64 + keep);
    }
    idx
}

/// Structural parameter count of `arch` with the first block rebuilt for the
/// reduced input width.
pub fn pruned_param_count(arch: &ArchSpec, spec: CompressionSpec) -> Result<usize> {
    spec.validate()?;
    let (first, _) =
        arch.stages.first().ok_or_else(|| Error::Config("architecture has no stages".into()))?;
    if !matches!(first.op, Operator::MbConv) {
        return Err(Error::Config("structural pruning expects a leading MBConv block".into()));
    }
    let full = count_params(arch);
    Ok(full - block_params(first, arch.input.2) + block_params(first, spec.channels()))
}

/// Rebuild the model's first MBConv block for the reduced channel count,
/// copying the surviving expand-conv input columns and the leading rows of
/// every downstream width. Returns the pruned model and the parameter delta.
pub fn prune_first_block(model: &Model<f32>, spec: CompressionSpec) -> Result<(Model<f32>, usize)> {
    spec.validate()?;
    if model.spec.input.2 != 192 {
        return Err(Error::Config(format!(
            "pruning expects a 192-channel input model, got {}",
            model.spec.input.2
        )));
    }
    let (first_spec, first_reps) = *model
        .spec
        .stages
        .first()
        .ok_or_else(|| Error::Config("architecture has no stages".into()))?;
    let old_block = match model.blocks.first() {
        Some(Block::MbConv(b)) => b,
        _ => {
            return Err(Error::Config("structural pruning expects a leading MBConv block".into()))
        }
    };

    let new_cin = spec.channels();
    let survivors = surviving_channels(spec);

    // stage table with the first block split out at the reduced width
    let mut stages = vec![(first_spec, 1usize)];
    if first_reps > 1 {
        stages.push((first_spec, first_reps - 1));
    }
    stages.extend(model.spec.stages.iter().skip(1).cloned());
    let new_spec = ArchSpec {
        name: format!("{}-pruned-{}", model.spec.name, spec),
        input: (model.spec.input.0, model.spec.input.1, new_cin),
        stages,
        ..model.spec.clone()
    };

    let mut pruned = model.clone();
    pruned.spec = new_spec;

    // weight surgery on the rebuilt first block
    let mut rng = ChaCha20Rng::seed_from_u64(model.seed);
    let mut nb = MbConvBlock::new(&first_spec, new_cin, &mut rng);
    nb.survive_p = old_block.survive_p;
    let cmid_old = first_spec.expansion * 192;
    let cmid_new = first_spec.expansion * new_cin;
    if let (Some((nc, nbn, _)), Some((oc, obn, _))) = (&mut nb.expand, &old_block.expand) {
        for r in 0..cmid_new {
            for (c, &src) in survivors.iter().enumerate() {
                nc.weight.value.data_mut()[r * new_cin + c] =
                    oc.weight.value.data()[r * 192 + src];
            }
        }
        copy_prefix(&mut nbn.gamma.value, &obn.gamma.value, cmid_new);
        copy_prefix(&mut nbn.beta.value, &obn.beta.value, cmid_new);
        copy_prefix(&mut nbn.running_mean, &obn.running_mean, cmid_new);
        copy_prefix(&mut nbn.running_var, &obn.running_var, cmid_new);
    }
    let k2 = first_spec.kernel * first_spec.kernel;
    nb.dw.weight.value.data_mut()[..cmid_new * k2]
        .copy_from_slice(&old_block.dw.weight.value.data()[..cmid_new * k2]);
    copy_prefix(&mut nb.dw_bn.gamma.value, &old_block.dw_bn.gamma.value, cmid_new);
    copy_prefix(&mut nb.dw_bn.beta.value, &old_block.dw_bn.beta.value, cmid_new);
    copy_prefix(&mut nb.dw_bn.running_mean, &old_block.dw_bn.running_mean, cmid_new);
    copy_prefix(&mut nb.dw_bn.running_var, &old_block.dw_bn.running_var, cmid_new);
    if let (Some(nse), Some(ose)) = (&mut nb.se, &old_block.se) {
        let cse_new = first_spec.se_width(new_cin);
        let cse_old = first_spec.se_width(192);
        for r in 0..cse_new {
            for c in 0..cmid_new {
                nse.reduce.weight.value.data_mut()[r * cmid_new + c] =
                    ose.reduce.weight.value.data()[r * cmid_old + c];
            }
        }
        copy_prefix(
            &mut nse.reduce.bias.as_mut().unwrap().value,
            &ose.reduce.bias.as_ref().unwrap().value,
            cse_new,
        );
        for r in 0..cmid_new {
            for c in 0..cse_new {
                nse.expand.weight.value.data_mut()[r * cse_new + c] =
                    ose.expand.weight.value.data()[r * cse_old + c];
            }
        }
        copy_prefix(
            &mut nse.expand.bias.as_mut().unwrap().value,
            &ose.expand.bias.as_ref().unwrap().value,
            cmid_new,
        );
    }
    let cout = first_spec.out_channels;
    for r in 0..cout {
        for c in 0..cmid_new {
            nb.project.weight.value.data_mut()[r * cmid_new + c] =
                old_block.project.weight.value.data()[r * cmid_old + c];
        }
    }
    nb.project_bn = old_block.project_bn.clone();
    pruned.blocks[0] = Block::MbConv(nb);

    // keep only the surviving channels' normalization statistics
    pruned.norm.mean = survivors.iter().map(|&i| model.norm.mean[i]).collect();
    pruned.norm.std = survivors.iter().map(|&i| model.norm.std[i]).collect();
    pruned.keep = spec;

    let delta = block_params(&first_spec, 192) - block_params(&first_spec, new_cin);
    Ok((pruned, delta))
}

fn copy_prefix<T: Scalar>(
    dst: &mut crate::tensor::Tensor<T>,
    src: &crate::tensor::Tensor<T>,
    n: usize,
) {
    dst.data_mut()[..n].copy_from_slice(&src.data()[..n]);
}

/// Render sweep rows as CSV text.
pub fn sweep_csv(reports: &[MaskReport]) -> String {
    let mut out = String::from("keep_y,keep_cb,keep_cr,channels,top1,params\n");
    for r in reports {
        let acc = r.accuracy.map(|a| format!("{a:.4}")).unwrap_or_else(|| "-".into());
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.spec.keep_y,
            r.spec.keep_cb,
            r.spec.keep_cr,
            r.channels_active,
            acc,
            r.pruned_param_count
        ));
    }
    out
}

/// The compression table's five keep-specs.
pub fn paper_sweep_specs() -> Vec<CompressionSpec> {
    [(64, 64, 64), (64, 12, 12), (44, 10, 10), (32, 8, 8), (14, 5, 5)]
        .into_iter()
        .map(|(y, cb, cr)| CompressionSpec { keep_y: y, keep_cb: cb, keep_cr: cr })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch;

    fn tensor_with_pattern() -> DctTensor {
        DctTensor {
            grid_h: 2,
            grid_w: 2,
            keep: CompressionSpec::FULL,
            data: (0..192 * 4).map(|i| i as f32 + 1.0).collect(),
        }
    }

    #[test]
    fn full_spec_masks_nothing_and_zero_spec_masks_everything() {
        let x = tensor_with_pattern();
        assert_eq!(mask_channels(&x, CompressionSpec::FULL).unwrap(), x);
        let zeroed = mask_channels(&x, CompressionSpec::new(0, 0, 0).unwrap()).unwrap();
        assert!(zeroed.data.iter().all(|&v| v == 0.0));
        assert_eq!(zeroed.channels(), 192, "masking never changes shape");
    }

    #[test]
    fn masking_is_idempotent_and_nested() {
        let x = tensor_with_pattern();
        let s1 = CompressionSpec::new(32, 16, 16).unwrap();
        let s2 = CompressionSpec::new(14, 5, 5).unwrap();
        let once = mask_channels(&x, s1).unwrap();
        assert_eq!(once, mask_channels(&once, s1).unwrap());
        // s2 keeps a subset of s1's channels: masking s2 after s1 equals s2 alone
        assert_eq!(mask_channels(&once, s2).unwrap(), mask_channels(&x, s2).unwrap());
    }

    #[test]
    fn pruned_totals_track_the_reported_sizes() {
        let spec = arch::efun_base();
        let want = [
            ((64, 64, 64), 4.23f64),
            ((64, 12, 12), 3.99),
            ((44, 10, 10), 3.96),
            ((32, 8, 8), 3.93),
            ((14, 5, 5), 3.91),
        ];
        for ((y, cb, cr), target) in want {
            let keep = CompressionSpec::new(y, cb, cr).unwrap();
            let total = pruned_param_count(&spec, keep).unwrap() as f64 / 1e6;
            assert!(
                (total - target).abs() <= 0.05,
                "prune {y}/{cb}/{cr}: {total:.4}M vs {target}M ± 0.05"
            );
        }
    }

    #[test]
    fn full_prune_is_the_identity_on_accounting() {
        let spec = arch::efun_base();
        assert_eq!(pruned_param_count(&spec, CompressionSpec::FULL).unwrap(), count_params(&spec));
    }

    #[test]
    fn oversized_keep_count_is_a_spec_error() {
        let x = tensor_with_pattern();
        let bad = CompressionSpec { keep_y: 65, keep_cb: 0, keep_cr: 0 };
        assert!(matches!(mask_channels(&x, bad), Err(Error::Spec(_))));
    }
}
