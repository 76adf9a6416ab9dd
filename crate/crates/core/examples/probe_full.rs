// Full-scale dry run of the acceptance protocol: 200 segments, 50 epochs,
// 20 test recordings, plus the criterion-5 reconstruction-vs-baselines check.
use spear_core::corpus::{gen_test_corpus, gen_train_corpus};
use spear_core::detect::DetectorKind;
use spear_core::metrics::{eval_harness, pool_variants};
use spear_core::nn::{DaeArchitecture, Mode, Tensor};
use spear_core::rng::{derive_seed, Rng};
use spear_core::signal::{BinaryMask, Signal};
use spear_core::train::{build_dataset, train_dae, MaskSpec, TrainConfig};

fn erased_rmse(pred: &[f64], truth: &[f64], lo: usize, hi: usize) -> f64 {
    let mut sq = 0.0;
    for i in lo..hi {
        let d = pred[i] - truth[i];
        sq += d * d;
    }
    (sq / (hi - lo) as f64).sqrt()
}

fn main() {
    let t0 = std::time::Instant::now();
    let seed = 7u64;
    let segs = gen_train_corpus(seed, 300).unwrap();
    let det = DetectorKind::oracle(BinaryMask::zeros(1920, 64.0));
    let pairs = build_dataset(&segs, &MaskSpec { seed: derive_seed(seed, "masks"), ..Default::default() }, &det).unwrap();
    println!("dataset: {} pairs ({:.1}s)", pairs.len(), t0.elapsed().as_secs_f64());
    let cfg = TrainConfig { epochs: 50, shuffle_seed: derive_seed(seed, "shuffle"), model_seed: derive_seed(seed, "model"), ..Default::default() };
    let outcome = train_dae(&pairs, DaeArchitecture::standard(), &cfg).unwrap();
    for l in outcome.log.iter().step_by(10).chain(std::iter::once(outcome.log.last().unwrap())) {
        println!("epoch {:2}  train {:.5}  val {:.5}  {} ms", l.epoch, l.train_rmse, l.val_rmse, l.wall_ms);
    }
    println!("trained in {:.1}s (best epoch {})", t0.elapsed().as_secs_f64(), outcome.best_epoch);
    let model = outcome.best_model;
    std::fs::write("/tmp/spear-probe-model.json", model.to_checkpoint_json()).unwrap();

    // Criterion-5 style check: held-out clean segments, fixed patches.
    let held: Vec<_> = {
        let mut rng = Rng::seed_from(derive_seed(seed, "held-out"));
        (0..50).map(|_| spear_core::corpus::drifting_clean_segment(&mut rng).unwrap()).collect()
    };
    let mut rng = Rng::seed_from(derive_seed(seed, "patches"));
    for patch_s in [1.0f64, 5.0, 10.0] {
        let patch = (patch_s * 64.0) as usize;
        let (mut dae_sum, mut zero_sum, mut lin_sum) = (0.0, 0.0, 0.0);
        for sig in &held {
            let start = rng.range_usize(1, 1920 - patch - 1);
            let mut input = Tensor::zeros(1, 1, 1920);
            input.data.copy_from_slice(&sig.samples);
            for i in start..start + patch {
                input.data[i] = 0.0;
            }
            let mut m = model.clone();
            let out = m.forward(&input, Mode::Eval).unwrap();
            dae_sum += erased_rmse(&out.data, &sig.samples, start, start + patch);
            let zeros = vec![0.0; 1920];
            zero_sum += erased_rmse(&zeros, &sig.samples, start, start + patch);
            let mut lin = sig.samples.clone();
            let a = sig.samples[start - 1];
            let b = sig.samples[start + patch];
            for i in 0..patch {
                lin[start + i] = a + (b - a) * (i + 1) as f64 / (patch + 1) as f64;
            }
            lin_sum += erased_rmse(&lin, &sig.samples, start, start + patch);
        }
        println!(
            "patch {patch_s:4.0} s: dae {:.4}  zero-fill {:.4}  linear {:.4}",
            dae_sum / 50.0, zero_sum / 50.0, lin_sum / 50.0
        );
    }

    // Criterion 6/7: the full 20-recording corpus.
    let tests = gen_test_corpus(seed, 20, 180.0).unwrap();
    let mut evals = Vec::new();
    for rec in &tests {
        let det = DetectorKind::oracle(rec.gt.noise_mask.clone());
        evals.push(eval_harness(&rec.noisy, &rec.gt, &model, &det, None).unwrap());
    }
    let pooled = pool_variants(&evals);
    for v in &pooled {
        println!(
            "{:10} hr_mae {:7.3} (n={:4}, dropped {:3})  sdnn_mae {:8.3}  rmssd_mae {:8.3} (hrv n={}, dropped {})",
            v.name, v.hr_mae(), v.hr_abs_errors.len(), v.hr_windows_dropped,
            v.sdnn_mae(), v.rmssd_mae(), v.sdnn_abs_errors.len(), v.hrv_windows_dropped
        );
    }
    let _ = Signal::new(vec![0.0], 64.0);
    println!("total {:.1}s", t0.elapsed().as_secs_f64());
}
