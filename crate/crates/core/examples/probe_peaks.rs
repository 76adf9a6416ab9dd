use spear_core::metrics::{detect_peaks, match_peaks};
use spear_core::pipeline::bandpass;
use spear_core::synth::{gen_clean, BeatTemplateParams, HrvMod, FS};

fn main() {
    let mut worst_cov = 1.0f64;
    let mut worst_hr_err = 0.0f64;
    for i in 0..50u64 {
        let hr = 45.0 + 135.0 * (i as f64) / 49.0;
        let depth = (hr - 40.0).min(6.0).max(0.0).min((210.0 - hr).max(0.0));
        let (sig, gt) = gen_clean(60.0, hr, HrvMod { depth_bpm: depth, freq_hz: 0.1 }, &BeatTemplateParams::default(), 400 + i).unwrap();
        let filtered = bandpass(&sig, 0.9, 5.0).unwrap();
        let beats = detect_peaks(&filtered).unwrap();
        let matched = match_peaks(&beats.peak_times_s, &gt.peak_times_s, 3.0 / FS);
        let cov = matched as f64 / gt.peak_times_s.len() as f64;
        // per-recording mean HR from detected vs gt
        let est_hr = 60.0 * (beats.peak_times_s.len() - 1) as f64
            / (beats.peak_times_s.last().unwrap() - beats.peak_times_s[0]);
        let gt_hr = 60.0 * (gt.peak_times_s.len() - 1) as f64
            / (gt.peak_times_s.last().unwrap() - gt.peak_times_s[0]);
        let err = (est_hr - gt_hr).abs();
        if cov < worst_cov { worst_cov = cov; println!("hr {hr:.1}: coverage {cov:.4} matched {matched}/{}  extra={}", gt.peak_times_s.len(), beats.peak_times_s.len() as i64 - gt.peak_times_s.len() as i64); }
        if err > worst_hr_err { worst_hr_err = err; println!("hr {hr:.1}: hr err {err:.3} bpm (est {est_hr:.2} vs {gt_hr:.2})"); }
    }
    println!("worst coverage = {worst_cov:.4}, worst per-recording HR err = {worst_hr_err:.3} bpm");
}
