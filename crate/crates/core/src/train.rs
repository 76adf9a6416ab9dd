//! Self-supervised training: random patch-erasure masks over clean segments
//! and the Adam training loop for the denoising autoencoder.

use std::time::Instant;

use thiserror::Error;

use crate::detect::{is_clean, DetectError, DetectorKind};
use crate::nn::{rmse_loss, AdamConfig, DaeArchitecture, DaeModel, Mode, NnError, Tensor};
use crate::rng::Rng;
use crate::signal::{BinaryMask, Segment, Signal};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("segment {index} is not clean under the configured detector")]
    NotClean { index: usize },
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Nn(#[from] NnError),
}

/// Patch-erasure mask generation parameters.
///
/// Masks here follow the training convention: 1 keeps a sample, 0 erases it
/// (the opposite of the artifact masks elsewhere). The training pair is
/// `(x * mask, x)`.
#[derive(Debug, Clone)]
pub struct MaskSpec {
    /// Patch length range in seconds.
    pub patch_len_s: (f64, f64),
    pub masks_per_signal: usize,
    pub seed: u64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self { patch_len_s: (1.0, 15.0), masks_per_signal: 10, seed: 0 }
    }
}

/// Generates `masks_per_signal` erasure masks for a segment of
/// `segment_len` samples at `fs`. Each mask zeroes one or two patches
/// (chosen uniformly); patch starts are uniform over valid positions and
/// lengths uniform over the sample range of `patch_len_s`. Two-patch masks
/// prefer disjoint patches (up to 100 resamples, then overlap is allowed).
pub fn gen_masks(segment_len: usize, fs: f64, spec: &MaskSpec) -> Vec<BinaryMask> {
    let mut rng = Rng::seed_from(spec.seed);
    let min_len = (spec.patch_len_s.0 * fs).round() as usize;
    let max_len = ((spec.patch_len_s.1 * fs).round() as usize).min(segment_len);
    let mut masks = Vec::with_capacity(spec.masks_per_signal);
    for _ in 0..spec.masks_per_signal {
        let mut flags = vec![1u8; segment_len];
        let patches = rng.range_usize(1, 2);
        let mut placed: Vec<(usize, usize)> = Vec::new();
        for _ in 0..patches {
            let mut len = rng.range_usize(min_len, max_len);
            let mut start = rng.range_usize(0, segment_len - len);
            if !placed.is_empty() {
                for _ in 0..100 {
                    let overlaps = placed
                        .iter()
                        .any(|&(s, l)| start < s + l && s < start + len);
                    if !overlaps {
                        break;
                    }
                    len = rng.range_usize(min_len, max_len);
                    start = rng.range_usize(0, segment_len - len);
                }
            }
            placed.push((start, len));
            for f in &mut flags[start..start + len] {
                *f = 0;
            }
        }
        masks.push(BinaryMask::new(flags, fs));
    }
    masks
}

#[derive(Debug, Clone)]
pub struct TrainPair {
    pub input: Signal,
    pub target: Signal,
}

/// Builds the self-supervised dataset: for every clean segment,
/// `masks_per_signal` pairs `(x * mask, x)`. Segments are validated against
/// the detector; a non-clean segment is a contract violation.
pub fn build_dataset(
    clean_segments: &[Segment],
    spec: &MaskSpec,
    detector: &DetectorKind,
) -> Result<Vec<TrainPair>, TrainError> {
    let mut pairs = Vec::with_capacity(clean_segments.len() * spec.masks_per_signal);
    for seg in clean_segments {
        if !is_clean(seg, detector)? {
            return Err(TrainError::NotClean { index: seg.index });
        }
        // Per-segment mask stream so the dataset does not depend on segment
        // iteration order.
        let seg_spec = MaskSpec {
            seed: crate::rng::derive_seed(
                spec.seed.wrapping_add(seg.index as u64),
                &seg.source_id,
            ),
            ..spec.clone()
        };
        for mask in gen_masks(seg.signal.len(), seg.signal.fs, &seg_spec) {
            let input_samples: Vec<f64> = seg
                .signal
                .samples
                .iter()
                .zip(&mask.flags)
                .map(|(&x, &m)| x * m as f64)
                .collect();
            pairs.push(TrainPair {
                input: Signal::with_t0(input_samples, seg.signal.fs, seg.signal.t0),
                target: seg.signal.clone(),
            });
        }
    }
    Ok(pairs)
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub shuffle_seed: u64,
    pub model_seed: u64,
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            batch_size: 32,
            lr: 1e-3,
            shuffle_seed: 0,
            model_seed: 0,
            validation_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_rmse: f64,
    pub val_rmse: f64,
    pub wall_ms: u64,
}

#[derive(Debug)]
pub struct TrainOutcome {
    /// Model after the final epoch.
    pub final_model: DaeModel,
    /// Checkpoint with the best validation loss (the final model when there
    /// is no validation split).
    pub best_model: DaeModel,
    pub best_epoch: usize,
    pub log: Vec<EpochLog>,
}

fn pairs_to_tensors(pairs: &[&TrainPair]) -> (Tensor, Tensor) {
    let len = pairs[0].input.len();
    let mut input = Tensor::zeros(pairs.len(), 1, len);
    let mut target = Tensor::zeros(pairs.len(), 1, len);
    for (i, pair) in pairs.iter().enumerate() {
        input.data[i * len..(i + 1) * len].copy_from_slice(&pair.input.samples);
        target.data[i * len..(i + 1) * len].copy_from_slice(&pair.target.samples);
    }
    (input, target)
}

/// Mini-batch Adam on `rmse(model(input), target)`. Batch order derives only
/// from `shuffle_seed`, so runs are reproducible.
pub fn train_dae(
    dataset: &[TrainPair],
    arch: DaeArchitecture,
    cfg: &TrainConfig,
) -> Result<TrainOutcome, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::Nn(NnError::EmptyDataset));
    }
    let mut rng = Rng::seed_from(cfg.shuffle_seed);
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    rng.shuffle(&mut indices);
    let val_n = ((dataset.len() as f64 * cfg.validation_fraction).round() as usize)
        .min(dataset.len().saturating_sub(1));
    let (val_idx, train_idx) = indices.split_at(val_n);
    let val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();

    let mut model = DaeModel::new(arch, cfg.model_seed);
    let mut adam = model.new_adam(AdamConfig { lr: cfg.lr, ..AdamConfig::default() });

    let mut best_model = model.clone();
    let mut best_epoch = 0;
    let mut best_val = f64::INFINITY;
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        rng.shuffle(&mut train_idx);

        let mut train_sq_sum = 0.0;
        let mut train_elems = 0usize;
        for (batch_no, batch) in train_idx.chunks(cfg.batch_size).enumerate() {
            let pairs: Vec<&TrainPair> = batch.iter().map(|&i| &dataset[i]).collect();
            let (input, target) = pairs_to_tensors(&pairs);
            model.zero_grads();
            let pred = model.forward(&input, Mode::Train)?;
            let (loss, grad) = rmse_loss(&pred, &target)?;
            if !loss.is_finite() {
                return Err(TrainError::Nn(NnError::NonFiniteLoss {
                    epoch,
                    batch: batch_no,
                    seed: cfg.shuffle_seed,
                }));
            }
            model.backward(&grad)?;
            model.adam_step(&mut adam);
            train_sq_sum += loss * loss * input.numel() as f64;
            train_elems += input.numel();
        }
        let train_rmse = (train_sq_sum / train_elems as f64).sqrt();

        let val_rmse = if val_idx.is_empty() {
            train_rmse
        } else {
            let mut sq_sum = 0.0;
            let mut elems = 0usize;
            for batch in val_idx.chunks(cfg.batch_size) {
                let pairs: Vec<&TrainPair> = batch.iter().map(|&i| &dataset[i]).collect();
                let (input, target) = pairs_to_tensors(&pairs);
                let pred = model.forward(&input, Mode::Eval)?;
                let (loss, _) = rmse_loss(&pred, &target)?;
                sq_sum += loss * loss * input.numel() as f64;
                elems += input.numel();
            }
            (sq_sum / elems as f64).sqrt()
        };

        if !val_idx.is_empty() && val_rmse < best_val {
            best_val = val_rmse;
            best_model = model.clone();
            best_epoch = epoch;
        }

        log.push(EpochLog {
            epoch,
            train_rmse,
            val_rmse,
            wall_ms: start.elapsed().as_millis() as u64,
        });
    }

    if val_idx.is_empty() {
        best_model = model.clone();
        best_epoch = cfg.epochs;
    }
    Ok(TrainOutcome { final_model: model, best_model, best_epoch, log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::DetectorKind;
    use crate::synth::{gen_clean, BeatTemplateParams, HrvMod};

    const FS: f64 = 64.0;

    #[test]
    fn masks_are_seed_deterministic() {
        let spec = MaskSpec { seed: 5, ..MaskSpec::default() };
        let a = gen_masks(1920, FS, &spec);
        let b = gen_masks(1920, FS, &spec);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10);
    }

    #[test]
    fn mask_erased_fraction_bounds() {
        for seed in 0..50 {
            let spec = MaskSpec { seed, ..MaskSpec::default() };
            for mask in gen_masks(1920, FS, &spec) {
                let erased = mask.flags.iter().filter(|&&f| f == 0).count();
                assert!(erased >= 64, "erased {erased}");
                assert!(erased <= 2 * 960, "erased {erased}");
                // Patches must lie fully inside: ends are implicitly
                // checked since flags has exactly segment length.
                assert_eq!(mask.len(), 1920);
            }
        }
    }

    /// Chi-square test of single-patch length uniformity over [1 s, 15 s].
    #[test]
    fn patch_length_histogram_is_uniform() {
        let mut lengths = Vec::new();
        let mut seed = 0;
        while lengths.len() < 1000 {
            let spec = MaskSpec { seed, masks_per_signal: 10, ..MaskSpec::default() };
            for mask in gen_masks(1920, FS, &spec) {
                // Single-patch masks only: one contiguous zero run.
                let mut runs = 0;
                let mut prev = 1u8;
                let mut run_len = 0usize;
                let mut this_len = 0usize;
                for &f in &mask.flags {
                    if f == 0 {
                        run_len += 1;
                    } else if prev == 0 {
                        runs += 1;
                        this_len = run_len;
                        run_len = 0;
                    }
                    prev = f;
                }
                if prev == 0 {
                    runs += 1;
                    this_len = run_len;
                }
                if runs == 1 {
                    lengths.push(this_len);
                }
            }
            seed += 1;
        }
        lengths.truncate(1000);
        // 8 equal-width bins over [64, 960]; chi-square 95% critical value
        // for 7 degrees of freedom is 14.07.
        let bins = 8;
        let mut counts = vec![0usize; bins];
        for &l in &lengths {
            let bin = ((l - 64) * bins) / (960 - 64 + 1);
            counts[bin.min(bins - 1)] += 1;
        }
        let expected = lengths.len() as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expected;
                d * d / expected
            })
            .sum();
        assert!(chi2 < 14.07, "chi-square {chi2}, counts {counts:?}");
    }

    fn clean_segments(count: usize) -> Vec<Segment> {
        (0..count)
            .map(|i| {
                let (sig, _) = gen_clean(
                    30.0,
                    65.0 + (i % 40) as f64,
                    HrvMod { depth_bpm: 3.0, freq_hz: 0.1 },
                    &BeatTemplateParams::default(),
                    700 + i as u64,
                )
                .unwrap();
                Segment { signal: sig, source_id: format!("seg{i}"), index: i }
            })
            .collect()
    }

    #[test]
    fn dataset_is_ten_pairs_per_segment() {
        let segs = clean_segments(5);
        let det = DetectorKind::oracle(BinaryMask::zeros(1920, FS));
        // Oracle mask covers only one segment span; give every segment t0 0.
        let segs: Vec<Segment> = segs
            .into_iter()
            .map(|mut s| {
                s.signal.t0 = 0.0;
                s
            })
            .collect();
        let pairs = build_dataset(&segs, &MaskSpec::default(), &det).unwrap();
        assert_eq!(pairs.len(), 50);
        for pair in &pairs {
            // Target equals the source segment; input matches target
            // wherever it was not erased.
            for (x, t) in pair.input.samples.iter().zip(&pair.target.samples) {
                assert!(*x == *t || *x == 0.0);
            }
        }
    }

    #[test]
    fn non_clean_segment_is_rejected() {
        let segs = clean_segments(1);
        let mut flags = vec![0u8; 1920];
        flags[5] = 1;
        let det = DetectorKind::oracle(BinaryMask::new(flags, FS));
        let segs: Vec<Segment> = segs
            .into_iter()
            .map(|mut s| {
                s.signal.t0 = 0.0;
                s
            })
            .collect();
        assert!(matches!(
            build_dataset(&segs, &MaskSpec::default(), &det),
            Err(TrainError::NotClean { .. })
        ));
    }

    #[test]
    fn training_is_reproducible_and_loss_improves() {
        let segs = clean_segments(4);
        let det = DetectorKind::oracle(BinaryMask::zeros(1920, FS));
        let segs: Vec<Segment> = segs
            .into_iter()
            .map(|mut s| {
                s.signal.t0 = 0.0;
                s
            })
            .collect();
        let pairs = build_dataset(&segs, &MaskSpec { seed: 3, ..Default::default() }, &det).unwrap();
        let cfg = TrainConfig { epochs: 3, batch_size: 8, ..Default::default() };
        let arch = DaeArchitecture { encoder_channels: vec![4, 8], ..DaeArchitecture::standard() };
        let a = train_dae(&pairs, arch.clone(), &cfg).unwrap();
        let b = train_dae(&pairs, arch, &cfg).unwrap();
        assert_eq!(
            a.final_model.to_checkpoint_json(),
            b.final_model.to_checkpoint_json()
        );
        assert!(
            a.log.last().unwrap().train_rmse < a.log[0].train_rmse,
            "loss did not improve: {:?}",
            a.log.iter().map(|l| l.train_rmse).collect::<Vec<_>>()
        );
    }

    #[test]
    fn empty_dataset_errors() {
        let cfg = TrainConfig::default();
        assert!(train_dae(&[], DaeArchitecture::standard(), &cfg).is_err());
    }
}
