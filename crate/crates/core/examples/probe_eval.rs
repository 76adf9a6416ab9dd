// Error-structure diagnostics against the checkpoint saved by probe_full.
use spear_core::corpus::gen_test_corpus;
use spear_core::detect::DetectorKind;
use spear_core::metrics::{detect_peaks, estimate_hr_windows, eval_harness, pool_variants, BeatSeries, HrWindowConfig};
use spear_core::nn::DaeModel;
use spear_core::pipeline::denoise_recording;

fn main() {
    let ckpt = std::fs::read_to_string("/tmp/spear-probe-model.json").expect("run probe_full first");
    let model = DaeModel::from_checkpoint_json(&ckpt).unwrap();
    let tests = gen_test_corpus(7, 20, 180.0).unwrap();

    let mut all_errs: Vec<(f64, f64)> = Vec::new(); // (err, burst_overlap_frac)
    let mut count_err_in_burst = 0i64;
    let mut true_in_burst = 0usize;
    for rec in &tests {
        let det = DetectorKind::oracle(rec.gt.noise_mask.clone());
        let (denoised, _) = denoise_recording(&rec.noisy, &model, &det).unwrap();
        let beats = detect_peaks(&denoised.signal).unwrap();
        let fs = 64.0;
        // Beat-count accuracy inside bursts.
        let in_burst = |t: f64| {
            let idx = ((t * fs) as usize).min(rec.gt.noise_mask.len() - 1);
            rec.gt.noise_mask.flags[idx] == 1
        };
        let est_n = beats.peak_times_s.iter().filter(|&&t| in_burst(t)).count() as i64;
        let true_n = rec.gt.peak_times_s.iter().filter(|&&t| in_burst(t)).count() as i64;
        count_err_in_burst += (est_n - true_n).abs();
        true_in_burst += true_n as usize;

        // Per-window errors vs burst overlap.
        let duration = rec.noisy.duration_s();
        let spans = [(0.0, duration)];
        let cfg = HrWindowConfig::default();
        let est = estimate_hr_windows(&beats, duration, &cfg, &spans);
        let gt = estimate_hr_windows(&BeatSeries::from_times(rec.gt.peak_times_s.clone()), duration, &cfg, &spans);
        for (e, t) in est.iter().zip(&gt) {
            if let (Some(e_bpm), Some(t_bpm)) = (e.bpm, t.bpm) {
                let lo = (e.t_start * fs) as usize;
                let hi = (((e.t_start + 8.0) * fs) as usize).min(rec.gt.noise_mask.len());
                let overlap = rec.gt.noise_mask.flags[lo..hi].iter().map(|&f| f as f64).sum::<f64>() / (hi - lo) as f64;
                all_errs.push(((e_bpm - t_bpm).abs(), overlap));
            }
        }
    }
    let mut sorted: Vec<f64> = all_errs.iter().map(|x| x.0).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q = |p: f64| sorted[((sorted.len() - 1) as f64 * p) as usize];
    println!("abs in-burst beat count error: {count_err_in_burst} of {true_in_burst} true in-burst beats");
    println!("window err quantiles: p50 {:.2} p75 {:.2} p90 {:.2} p99 {:.2} max {:.2}", q(0.5), q(0.75), q(0.9), q(0.99), q(1.0));
    let clean_windows: Vec<f64> = all_errs.iter().filter(|x| x.1 == 0.0).map(|x| x.0).collect();
    let burst_windows: Vec<f64> = all_errs.iter().filter(|x| x.1 > 0.0).map(|x| x.0).collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!("clean windows: n={} mae {:.3}; burst-overlap windows: n={} mae {:.3}", clean_windows.len(), mean(&clean_windows), burst_windows.len(), mean(&burst_windows));
    // Bucket by overlap fraction.
    for (lo, hi) in [(0.0, 0.2), (0.2, 0.4), (0.4, 0.6), (0.6, 1.01)] {
        let bucket: Vec<f64> = all_errs.iter().filter(|x| x.1 > lo && x.1 <= hi).map(|x| x.0).collect();
        if !bucket.is_empty() {
            println!("  overlap {:.0}-{:.0}%: n={:4} mae {:.3}", lo * 100.0, hi * 100.0, bucket.len(), mean(&bucket));
        }
    }
    let mut evals = Vec::new();
    for rec in &tests {
        let det = DetectorKind::oracle(rec.gt.noise_mask.clone());
        evals.push(eval_harness(&rec.noisy, &rec.gt, &model, &det, None).unwrap());
    }
    for v in pool_variants(&evals) {
        println!("{:10} hr_mae {:7.3}  sdnn_mae {:8.3}  rmssd_mae {:8.3}", v.name, v.hr_mae(), v.sdnn_mae(), v.rmssd_mae());
    }
}
