//! Seeded corpus generation shared by the CLI and the acceptance suite: a
//! clean training set of 30 s segments and a paired clean/noisy test set of
//! longer recordings. All randomness derives from one master seed through
//! tagged streams, so every stage can be reproduced independently.

use crate::rng::{derive_seed, Rng};
use crate::signal::{Segment, Signal};
use crate::synth::{corrupt, gen_clean, BeatTemplateParams, GroundTruth, HrvMod, NoiseSpec, SynthError};

pub const TRAIN_HR_BPM: (f64, f64) = (50.0, 110.0);
pub const TEST_HR_BPM: (f64, f64) = (55.0, 100.0);
pub const HRV_DEPTH_BPM: (f64, f64) = (2.0, 8.0);
pub const HRV_FREQ_HZ: (f64, f64) = (0.05, 0.25);

/// Noise used for test recordings: strong baseline wander, dense in-band
/// bursts, and noticeable FM jitter. Burst count scales with duration
/// (about one per 18 s).
pub fn standard_noise_spec(duration_s: f64, seed: u64) -> NoiseSpec {
    NoiseSpec {
        bw_amp: 0.4,
        bw_freq_hz: 0.15,
        fm_jitter_frac: 0.35,
        burst_amp: 2.5,
        burst_count: ((duration_s / 18.0).round() as usize).max(1),
        burst_len_s: (2.0, 6.0),
        seed,
    }
}

/// `count` clean 30 s segments with per-segment HR/HRV drawn from the
/// training ranges.
///
/// "Clean" means artifact-free, not drift-free: real wrist-worn recordings
/// that pass artifact screening still carry low-frequency baseline drift, so
/// after [0, 1] normalization the cardiac component occupies a varying
/// fraction of the range. Each segment gets two seeded wander components of
/// random amplitude so the autoencoder trains on the same amplitude and
/// baseline diversity it meets at inference time.
pub fn gen_train_corpus(master_seed: u64, count: usize) -> Result<Vec<Segment>, SynthError> {
    let mut rng = Rng::seed_from(derive_seed(master_seed, "train-corpus"));
    (0..count)
        .map(|i| {
            let sig = drifting_clean_segment(&mut rng)?;
            Ok(Segment { signal: sig, source_id: format!("train-{i:04}"), index: i })
        })
        .collect()
}

/// Per-recording beat morphology: corpora span subjects, so widths,
/// dicrotic prominence, and dicrotic timing vary from signal to signal.
pub fn sample_template(rng: &mut Rng) -> BeatTemplateParams {
    BeatTemplateParams {
        systolic_amp: 1.0,
        systolic_width_s: rng.range_f64(0.06, 0.10),
        dicrotic_amp: rng.range_f64(0.25, 0.45),
        dicrotic_width_s: rng.range_f64(0.09, 0.15),
        dicrotic_delay_frac: rng.range_f64(0.38, 0.52),
    }
}

/// One artifact-free 30 s segment drawn from the training distribution:
/// modulated beats plus two wander components of random amplitude.
pub fn drifting_clean_segment(rng: &mut Rng) -> Result<Signal, SynthError> {
    let hr = rng.range_f64(TRAIN_HR_BPM.0, TRAIN_HR_BPM.1);
    let depth = rng.range_f64(HRV_DEPTH_BPM.0, HRV_DEPTH_BPM.1);
    let freq = rng.range_f64(HRV_FREQ_HZ.0, HRV_FREQ_HZ.1);
    let template = sample_template(rng);
    let (sig, gt) = gen_clean(
        30.0,
        hr,
        HrvMod { depth_bpm: depth, freq_hz: freq },
        &template,
        rng.next_u64(),
    )?;
    let slow_drift = NoiseSpec {
        bw_amp: rng.range_f64(0.0, 1.2),
        bw_freq_hz: rng.range_f64(0.05, 0.2),
        burst_count: 0,
        seed: rng.next_u64(),
        ..NoiseSpec::default()
    };
    let (sig, gt) = corrupt(&sig, &gt, &slow_drift)?;
    let fast_drift = NoiseSpec {
        bw_amp: rng.range_f64(0.0, 0.5),
        bw_freq_hz: rng.range_f64(0.2, 0.45),
        burst_count: 0,
        seed: rng.next_u64(),
        ..NoiseSpec::default()
    };
    Ok(corrupt(&sig, &gt, &fast_drift)?.0)
}

#[derive(Debug, Clone)]
pub struct TestRecording {
    pub id: String,
    pub clean: Signal,
    pub noisy: Signal,
    pub gt: GroundTruth,
}

/// `count` paired clean/noisy recordings of `duration_s` seconds.
pub fn gen_test_corpus(
    master_seed: u64,
    count: usize,
    duration_s: f64,
) -> Result<Vec<TestRecording>, SynthError> {
    let mut rng = Rng::seed_from(derive_seed(master_seed, "test-corpus"));
    (0..count)
        .map(|i| {
            let hr = rng.range_f64(TEST_HR_BPM.0, TEST_HR_BPM.1);
            let depth = rng.range_f64(HRV_DEPTH_BPM.0, HRV_DEPTH_BPM.1);
            let freq = rng.range_f64(HRV_FREQ_HZ.0, HRV_FREQ_HZ.1);
            let template = sample_template(&mut rng);
            let (clean, gt) = gen_clean(
                duration_s,
                hr,
                HrvMod { depth_bpm: depth, freq_hz: freq },
                &template,
                rng.next_u64(),
            )?;
            let spec = standard_noise_spec(duration_s, rng.next_u64());
            let (noisy, gt) = corrupt(&clean, &gt, &spec)?;
            Ok(TestRecording { id: format!("test-{i:04}"), clean, noisy, gt })
        })
        .collect()
}
