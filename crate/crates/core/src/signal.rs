//! Core signal types, segmentation, normalization, and the erase/merge
//! algebra that the whole denoising pipeline is built on.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("empty signal")]
    Empty,
    #[error("invalid sampling rate: {0}")]
    BadSamplingRate(f64),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("mixed sampling rates: {0} vs {1}")]
    MixedSamplingRates(f64, f64),
    #[error("invalid window: {0}")]
    BadWindow(f64),
}

/// A uniformly sampled PPG trace. `t0` is the start offset in seconds
/// relative to the parent recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    pub samples: Vec<f64>,
    pub fs: f64,
    pub t0: f64,
}

impl Signal {
    pub fn new(samples: Vec<f64>, fs: f64) -> Self {
        Self { samples, fs, t0: 0.0 }
    }

    pub fn with_t0(samples: Vec<f64>, fs: f64, t0: f64) -> Self {
        Self { samples, fs, t0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.fs
    }
}

/// Per-sample artifact/erasure indicator aligned to a [`Signal`].
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryMask {
    pub flags: Vec<u8>,
    pub fs: f64,
}

impl BinaryMask {
    pub fn new(flags: Vec<u8>, fs: f64) -> Self {
        debug_assert!(flags.iter().all(|&f| f <= 1));
        Self { flags, fs }
    }

    pub fn zeros(len: usize, fs: f64) -> Self {
        Self { flags: vec![0; len], fs }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    /// Fraction of samples flagged as corrupted.
    pub fn corrupted_fraction(&self) -> f64 {
        if self.flags.is_empty() {
            return 0.0;
        }
        self.flags.iter().map(|&f| f as f64).sum::<f64>() / self.flags.len() as f64
    }

    pub fn is_all_zero(&self) -> bool {
        self.flags.iter().all(|&f| f == 0)
    }

    /// Slices the mask to `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> BinaryMask {
        BinaryMask {
            flags: self.flags[start..start + len].to_vec(),
            fs: self.fs,
        }
    }
}

/// One fixed-length window of a recording (30 s / 1920 samples at 64 Hz in
/// the standard protocol).
#[derive(Debug, Clone)]
pub struct Segment {
    pub signal: Signal,
    pub source_id: String,
    pub index: usize,
}

/// Splits `recording` into non-overlapping windows of `window_s` seconds.
/// A trailing remainder shorter than the window is dropped.
pub fn segment(recording: &Signal, window_s: f64) -> Result<Vec<Segment>, SignalError> {
    segment_with_id(recording, window_s, "")
}

pub fn segment_with_id(
    recording: &Signal,
    window_s: f64,
    source_id: &str,
) -> Result<Vec<Segment>, SignalError> {
    if recording.is_empty() {
        return Err(SignalError::Empty);
    }
    if !(recording.fs > 0.0) {
        return Err(SignalError::BadSamplingRate(recording.fs));
    }
    if !(window_s > 0.0) {
        return Err(SignalError::BadWindow(window_s));
    }
    let win = (window_s * recording.fs).round() as usize;
    let count = recording.len() / win;
    Ok((0..count)
        .map(|i| Segment {
            signal: Signal::with_t0(
                recording.samples[i * win..(i + 1) * win].to_vec(),
                recording.fs,
                recording.t0 + i as f64 * window_s,
            ),
            source_id: source_id.to_string(),
            index: i,
        })
        .collect())
}

/// Min-max normalization to [0, 1]. A constant signal maps to all 0.5.
pub fn normalize_minmax(signal: &Signal) -> Result<Signal, SignalError> {
    if signal.is_empty() {
        return Err(SignalError::Empty);
    }
    let min = signal.samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = signal.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let samples = if max == min {
        vec![0.5; signal.len()]
    } else {
        let scale = max - min;
        signal.samples.iter().map(|&x| (x - min) / scale).collect()
    };
    Ok(Signal { samples, fs: signal.fs, t0: signal.t0 })
}

/// `output[i] = signal[i] * (1 - mask[i])`: flagged samples become exactly 0.
pub fn erase(signal: &Signal, mask: &BinaryMask) -> Result<Signal, SignalError> {
    if signal.len() != mask.len() {
        return Err(SignalError::LengthMismatch { left: signal.len(), right: mask.len() });
    }
    let samples = signal
        .samples
        .iter()
        .zip(&mask.flags)
        .map(|(&x, &m)| if m == 1 { 0.0 } else { x })
        .collect();
    Ok(Signal { samples, fs: signal.fs, t0: signal.t0 })
}

/// `output[i] = x_in[i] * (1 - mask[i]) + y_out[i] * mask[i]`.
/// Unmasked samples are bit-identical to `x_in`.
pub fn merge(x_in: &Signal, y_out: &Signal, mask: &BinaryMask) -> Result<Signal, SignalError> {
    if x_in.len() != y_out.len() {
        return Err(SignalError::LengthMismatch { left: x_in.len(), right: y_out.len() });
    }
    if x_in.len() != mask.len() {
        return Err(SignalError::LengthMismatch { left: x_in.len(), right: mask.len() });
    }
    let samples = x_in
        .samples
        .iter()
        .zip(&y_out.samples)
        .zip(&mask.flags)
        .map(|((&x, &y), &m)| if m == 1 { y } else { x })
        .collect();
    Ok(Signal { samples, fs: x_in.fs, t0: x_in.t0 })
}

/// One contiguous run of output samples traced back to a source segment.
#[derive(Debug, Clone, PartialEq)]
pub struct ProvenanceRegion {
    /// First output sample of the region.
    pub start_sample: usize,
    pub len: usize,
    /// Index of the source segment in the parent recording.
    pub source_index: usize,
    /// Start time of the source segment in the parent recording.
    pub source_t0: f64,
}

/// A concatenation of accepted segments plus the map from output sample
/// ranges back to their source segments. Discarded segments create time
/// discontinuities, which downstream windowed metrics must not straddle.
#[derive(Debug, Clone)]
pub struct JoinedSignal {
    pub signal: Signal,
    pub regions: Vec<ProvenanceRegion>,
}

impl JoinedSignal {
    /// Output-time boundaries (seconds) where adjacent regions came from
    /// non-adjacent source segments.
    pub fn discontinuities_s(&self) -> Vec<f64> {
        let mut cuts = Vec::new();
        for pair in self.regions.windows(2) {
            if pair[1].source_index != pair[0].source_index + 1 {
                cuts.push(pair[1].start_sample as f64 / self.signal.fs);
            }
        }
        cuts
    }
}

/// Concatenates segments (already filtered to the accepted ones, ordered by
/// index) and records the provenance map.
pub fn join(segments: &[Segment]) -> Result<JoinedSignal, SignalError> {
    if segments.is_empty() {
        return Err(SignalError::Empty);
    }
    let fs = segments[0].signal.fs;
    for seg in segments {
        if seg.signal.fs != fs {
            return Err(SignalError::MixedSamplingRates(fs, seg.signal.fs));
        }
    }
    let mut samples = Vec::with_capacity(segments.iter().map(|s| s.signal.len()).sum());
    let mut regions = Vec::with_capacity(segments.len());
    for seg in segments {
        regions.push(ProvenanceRegion {
            start_sample: samples.len(),
            len: seg.signal.len(),
            source_index: seg.index,
            source_t0: seg.signal.t0,
        });
        samples.extend_from_slice(&seg.signal.samples);
    }
    Ok(JoinedSignal {
        signal: Signal::new(samples, fs),
        regions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn sig(samples: Vec<f64>) -> Signal {
        Signal::new(samples, 64.0)
    }

    #[test]
    fn segment_drops_trailing_remainder() {
        let rec = sig(vec![0.0; 95 * 64]);
        let segs = segment(&rec, 30.0).unwrap();
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| s.signal.len() == 1920));
    }

    #[test]
    fn segment_identity_for_exact_window() {
        let rec = sig((0..1920).map(|i| i as f64).collect());
        let segs = segment(&rec, 30.0).unwrap();
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].signal.samples, rec.samples);
        assert_eq!(segs[0].signal.t0, 0.0);
    }

    #[test]
    fn segment_records_offsets() {
        let rec = sig(vec![1.0; 60 * 64]);
        let segs = segment(&rec, 30.0).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].signal.t0, 0.0);
        assert_eq!(segs[1].signal.t0, 30.0);
        assert_eq!(segs[1].index, 1);
    }

    #[test]
    fn segment_empty_errors() {
        assert!(matches!(segment(&sig(vec![]), 30.0), Err(SignalError::Empty)));
    }

    #[test]
    fn normalize_affine_map() {
        let out = normalize_minmax(&sig(vec![2.0, 4.0, 6.0])).unwrap();
        assert_eq!(out.samples, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn normalize_identity_on_unit_range() {
        let out = normalize_minmax(&sig(vec![0.0, 1.0])).unwrap();
        assert_eq!(out.samples, vec![0.0, 1.0]);
    }

    #[test]
    fn normalize_constant_maps_to_half() {
        let out = normalize_minmax(&sig(vec![3.0, 3.0, 3.0])).unwrap();
        assert_eq!(out.samples, vec![0.5, 0.5, 0.5]);
    }

    #[test]
    fn erase_zeroes_masked_positions() {
        let s = sig(vec![0.2, 0.8, 0.5]);
        let m = BinaryMask::new(vec![0, 1, 0], 64.0);
        assert_eq!(erase(&s, &m).unwrap().samples, vec![0.2, 0.0, 0.5]);
    }

    #[test]
    fn erase_identity_for_zero_mask() {
        let s = sig(vec![0.3, 0.4]);
        let m = BinaryMask::zeros(2, 64.0);
        assert_eq!(erase(&s, &m).unwrap().samples, s.samples);
    }

    #[test]
    fn erase_patch_indices() {
        // patch at 5 s, length 3 s, fs 64 -> samples 320..512
        let s = sig(vec![1.0; 1920]);
        let mut flags = vec![0u8; 1920];
        for f in &mut flags[320..512] {
            *f = 1;
        }
        let out = erase(&s, &BinaryMask::new(flags, 64.0)).unwrap();
        let zeroed = out.samples.iter().filter(|&&x| x == 0.0).count();
        assert_eq!(zeroed, 192);
        assert_eq!(out.samples[319], 1.0);
        assert_eq!(out.samples[320], 0.0);
        assert_eq!(out.samples[511], 0.0);
        assert_eq!(out.samples[512], 1.0);
    }

    #[test]
    fn erase_length_mismatch_errors() {
        let s = sig(vec![1.0, 2.0]);
        let m = BinaryMask::zeros(3, 64.0);
        assert!(erase(&s, &m).is_err());
    }

    #[test]
    fn merge_cases() {
        let x = sig(vec![0.1, 0.0, 0.3]);
        let y = sig(vec![0.9, 0.7, 0.9]);
        let m = BinaryMask::new(vec![0, 1, 0], 64.0);
        assert_eq!(merge(&x, &y, &m).unwrap().samples, vec![0.1, 0.7, 0.3]);

        let all_zero = BinaryMask::zeros(3, 64.0);
        assert_eq!(merge(&x, &y, &all_zero).unwrap().samples, x.samples);

        let all_one = BinaryMask::new(vec![1, 1, 1], 64.0);
        assert_eq!(merge(&x, &y, &all_one).unwrap().samples, y.samples);
    }

    #[test]
    fn join_concatenates_and_tracks_provenance() {
        let a = Segment { signal: sig(vec![1.0; 1920]), source_id: "r".into(), index: 0 };
        let b = Segment {
            signal: Signal::with_t0(vec![2.0; 1920], 64.0, 30.0),
            source_id: "r".into(),
            index: 1,
        };
        let joined = join(&[a.clone(), b]).unwrap();
        assert_eq!(joined.signal.len(), 3840);
        assert!(joined.discontinuities_s().is_empty());

        let single = join(&[a]).unwrap();
        assert_eq!(single.signal.len(), 1920);
    }

    #[test]
    fn join_records_discontinuity_when_segment_discarded() {
        let a = Segment { signal: sig(vec![1.0; 1920]), source_id: "r".into(), index: 0 };
        let c = Segment {
            signal: Signal::with_t0(vec![3.0; 1920], 64.0, 60.0),
            source_id: "r".into(),
            index: 2,
        };
        let joined = join(&[a, c]).unwrap();
        assert_eq!(joined.signal.len(), 3840);
        assert_eq!(joined.discontinuities_s(), vec![1920.0 / 64.0]);
    }

    #[test]
    fn join_rejects_mixed_rates() {
        let a = Segment { signal: sig(vec![1.0; 64]), source_id: "r".into(), index: 0 };
        let b = Segment {
            signal: Signal::new(vec![1.0; 32], 32.0),
            source_id: "r".into(),
            index: 1,
        };
        assert!(matches!(join(&[a, b]), Err(SignalError::MixedSamplingRates(_, _))));
    }

    #[test]
    fn erase_merge_round_trip_randomized() {
        let mut rng = Rng::seed_from(31);
        for _ in 0..200 {
            let n = rng.range_usize(1, 400);
            let x = sig((0..n).map(|_| rng.next_f64()).collect());
            let m = BinaryMask::new((0..n).map(|_| (rng.next_f64() < 0.3) as u8).collect(), 64.0);
            let erased = erase(&x, &m).unwrap();
            let back = merge(&erased, &x, &m).unwrap();
            assert_eq!(back.samples, x.samples);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let mut rng = Rng::seed_from(5);
        let x = sig((0..100).map(|_| rng.range_f64(-3.0, 9.0)).collect());
        let once = normalize_minmax(&x).unwrap();
        let twice = normalize_minmax(&once).unwrap();
        assert_eq!(once.samples, twice.samples);
    }

    #[test]
    fn segment_then_join_is_identity_for_exact_multiple() {
        let mut rng = Rng::seed_from(17);
        let rec = sig((0..3 * 1920).map(|_| rng.next_f64()).collect());
        let segs = segment(&rec, 30.0).unwrap();
        let joined = join(&segs).unwrap();
        assert_eq!(joined.signal.samples, rec.samples);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn signal_mask_pair() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
            prop::collection::vec((any::<f64>().prop_filter("finite", |v| v.is_finite()), 0u8..=1), 1..300)
                .prop_map(|pairs| pairs.into_iter().unzip())
        }

        proptest! {
            #[test]
            fn erase_merge_round_trip((samples, flags) in signal_mask_pair()) {
                let x = sig(samples);
                let m = BinaryMask::new(flags, 64.0);
                let erased = erase(&x, &m).unwrap();
                let back = merge(&erased, &x, &m).unwrap();
                prop_assert_eq!(back.samples, x.samples);
            }

            #[test]
            fn merge_preserves_unmasked_bits((samples, flags) in signal_mask_pair()) {
                let x = sig(samples.clone());
                let y = sig(samples.iter().map(|v| v * 0.5 + 0.1).collect());
                let m = BinaryMask::new(flags, 64.0);
                let merged = merge(&x, &y, &m).unwrap();
                for i in 0..x.len() {
                    if m.flags[i] == 0 {
                        prop_assert!(merged.samples[i].to_bits() == x.samples[i].to_bits());
                    }
                }
            }

            #[test]
            fn normalize_idempotent_on_nonconstant(samples in prop::collection::vec(-1e6f64..1e6, 2..200)) {
                prop_assume!(samples.iter().any(|&v| v != samples[0]));
                let once = normalize_minmax(&sig(samples)).unwrap();
                let twice = normalize_minmax(&once).unwrap();
                prop_assert_eq!(once.samples, twice.samples);
            }
        }
    }
}
