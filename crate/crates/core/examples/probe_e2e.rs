use spear_core::detect::DetectorKind;
use spear_core::metrics::{eval_harness, pool_variants};
use spear_core::nn::DaeArchitecture;
use spear_core::rng::{derive_seed, Rng};
use spear_core::signal::Segment;
use spear_core::synth::{corrupt, gen_clean, BeatTemplateParams, GroundTruth, HrvMod, NoiseSpec};
use spear_core::train::{build_dataset, train_dae, MaskSpec, TrainConfig};
use spear_core::signal::BinaryMask;

fn gen_corpus(count: usize, seed: u64) -> Vec<Segment> {
    let mut rng = Rng::seed_from(seed);
    (0..count)
        .map(|i| {
            let hr = rng.range_f64(50.0, 110.0);
            let depth = rng.range_f64(2.0, 8.0);
            let freq = rng.range_f64(0.05, 0.3);
            let (sig, _) = gen_clean(30.0, hr, HrvMod { depth_bpm: depth, freq_hz: freq }, &BeatTemplateParams::default(), rng.next_u64()).unwrap();
            Segment { signal: sig, source_id: format!("train{i}"), index: i }
        })
        .collect()
}

fn gen_test(count: usize, seed: u64) -> Vec<(spear_core::signal::Signal, GroundTruth)> {
    let mut rng = Rng::seed_from(seed);
    (0..count)
        .map(|_| {
            let hr = rng.range_f64(55.0, 100.0);
            let depth = rng.range_f64(3.0, 8.0);
            let freq = rng.range_f64(0.05, 0.25);
            let (clean, gt) = gen_clean(180.0, hr, HrvMod { depth_bpm: depth, freq_hz: freq }, &BeatTemplateParams::default(), rng.next_u64()).unwrap();
            let spec = NoiseSpec {
                bw_amp: 0.4,
                bw_freq_hz: 0.15,
                fm_jitter_frac: 0.35,
                burst_amp: 2.5,
                burst_count: 10,
                burst_len_s: (2.0, 6.0),
                seed: rng.next_u64(),
            };
            let (noisy, gt2) = corrupt(&clean, &gt, &spec).unwrap();
            (noisy, gt2)
        })
        .collect()
}

fn main() {
    let t0 = std::time::Instant::now();
    let segs = gen_corpus(50, derive_seed(7, "train-corpus"));
    let det = DetectorKind::oracle(BinaryMask::zeros(1920, 64.0));
    let pairs = build_dataset(&segs, &MaskSpec { seed: derive_seed(7, "masks"), ..Default::default() }, &det).unwrap();
    println!("dataset: {} pairs ({:.1}s)", pairs.len(), t0.elapsed().as_secs_f64());
    let cfg = TrainConfig { epochs: 10, shuffle_seed: derive_seed(7, "shuffle"), model_seed: derive_seed(7, "model"), ..Default::default() };
    let outcome = train_dae(&pairs, DaeArchitecture::standard(), &cfg).unwrap();
    for l in &outcome.log {
        println!("epoch {:2}  train {:.5}  val {:.5}  {} ms", l.epoch, l.train_rmse, l.val_rmse, l.wall_ms);
    }
    let model = outcome.best_model;

    let tests = gen_test(6, derive_seed(7, "test-corpus"));
    let mut evals = Vec::new();
    for (noisy, gt) in &tests {
        let det = DetectorKind::oracle(gt.noise_mask.clone());
        evals.push(eval_harness(noisy, gt, &model, &det, None).unwrap());
    }
    let pooled = pool_variants(&evals);
    for v in &pooled {
        println!(
            "{:10} hr_mae {:7.3} (n={:3}, dropped {:2})  sdnn_mae {:8.3}  rmssd_mae {:8.3} (hrv n={}, dropped {})",
            v.name, v.hr_mae(), v.hr_abs_errors.len(), v.hr_windows_dropped,
            v.sdnn_mae(), v.rmssd_mae(), v.sdnn_abs_errors.len(), v.hrv_windows_dropped
        );
    }
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
