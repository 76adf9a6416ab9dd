// Diagnose: are spear HR errors concentrated in reconstructed regions, and
// does the amplitude gate reject damped reconstructed beats?
use spear_core::corpus::{gen_test_corpus, gen_train_corpus};
use spear_core::detect::DetectorKind;
use spear_core::metrics::{detect_peaks, match_peaks};
use spear_core::nn::DaeArchitecture;
use spear_core::pipeline::denoise_recording;
use spear_core::rng::derive_seed;
use spear_core::signal::BinaryMask;
use spear_core::train::{build_dataset, train_dae, MaskSpec, TrainConfig};

fn main() {
    let seed = 7u64;
    // Small fast model for the diagnosis (10 epochs x 50 segs like before,
    // then compare with the damping profile).
    let segs = gen_train_corpus(seed, 50).unwrap();
    let det = DetectorKind::oracle(BinaryMask::zeros(1920, 64.0));
    let pairs = build_dataset(&segs, &MaskSpec { seed: derive_seed(seed, "masks"), ..Default::default() }, &det).unwrap();
    let cfg = TrainConfig { epochs: 25, shuffle_seed: derive_seed(seed, "shuffle"), model_seed: derive_seed(seed, "model"), ..Default::default() };
    let outcome = train_dae(&pairs, DaeArchitecture::standard(), &cfg).unwrap();
    let model = outcome.best_model;

    let tests = gen_test_corpus(seed, 4, 180.0).unwrap();
    for rec in tests.iter().take(2) {
        let det = DetectorKind::oracle(rec.gt.noise_mask.clone());
        let (denoised, _) = denoise_recording(&rec.noisy, &model, &det).unwrap();
        let beats = detect_peaks(&denoised.signal).unwrap();
        // Split gt peaks into in-burst vs clean-region, measure match rates.
        let fs = 64.0;
        let mut in_burst = (0usize, 0usize);
        let mut clean = (0usize, 0usize);
        for &t in &rec.gt.peak_times_s {
            let idx = ((t * fs) as usize).min(rec.gt.noise_mask.len() - 1);
            let matched = match_peaks(&beats.peak_times_s, &[t], 3.0 / fs) == 1;
            if rec.gt.noise_mask.flags[idx] == 1 {
                in_burst.1 += 1;
                if matched { in_burst.0 += 1; }
            } else {
                clean.1 += 1;
                if matched { clean.0 += 1; }
            }
        }
        println!(
            "rec {}: clean-region match {}/{}  in-burst match {}/{}",
            rec.id, clean.0, clean.1, in_burst.0, in_burst.1
        );
        // Amplitude of denoised signal inside vs outside bursts.
        let samples = &denoised.signal.samples;
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        let mut amp_in = 0.0; let mut n_in = 0usize;
        let mut amp_out = 0.0; let mut n_out = 0usize;
        for (i, &v) in samples.iter().enumerate() {
            let d = (v - mean).max(0.0).powi(2);
            if rec.gt.noise_mask.flags[i] == 1 { amp_in += d; n_in += 1; } else { amp_out += d; n_out += 1; }
        }
        println!("  mean squared (demeaned, clipped) in-burst {:.5} vs clean {:.5}", amp_in / n_in as f64, amp_out / n_out as f64);
    }
}
