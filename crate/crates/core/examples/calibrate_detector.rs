use spear_core::detect::{detect, DetectorKind, HeuristicDetector};
use spear_core::signal::segment;
use spear_core::synth::{corrupt, gen_clean, BeatTemplateParams, HrvMod, NoiseSpec};

fn main() {
    // Sweep thresholds: worst clean fraction and worst burst coverage.
    for z in [3.5, 4.5, 6.0, 8.0, 10.0] {
        let det = DetectorKind::Heuristic(HeuristicDetector { z_threshold: z, ..Default::default() });
        let mut worst_clean = 0.0f64;
        for seed in 0..100u64 {
            let (sig, _) = gen_clean(30.0, 60.0 + (seed % 60) as f64, HrvMod { depth_bpm: 3.0, freq_hz: 0.1 }, &BeatTemplateParams::default(), 1000 + seed).unwrap();
            let seg = segment(&sig, 30.0).unwrap().remove(0);
            let out = detect(&seg, &det).unwrap();
            worst_clean = worst_clean.max(out.mask.corrupted_fraction());
        }
        let mut worst_cov = 1.0f64;
        for seed in 0..50u64 {
            let (sig, gt) = gen_clean(30.0, 60.0 + (seed % 60) as f64, HrvMod { depth_bpm: 3.0, freq_hz: 0.1 }, &BeatTemplateParams::default(), 2000 + seed).unwrap();
            let spec = NoiseSpec { bw_amp: 0.0, burst_amp: 3.0, burst_count: 1, burst_len_s: (5.0, 5.0), seed, ..NoiseSpec::default() };
            let (noisy, gt2) = corrupt(&sig, &gt, &spec).unwrap();
            let seg = segment(&noisy, 30.0).unwrap().remove(0);
            let out = detect(&seg, &det).unwrap();
            let burst: Vec<usize> = (0..1920).filter(|&i| gt2.noise_mask.flags[i] == 1).collect();
            let hit = burst.iter().filter(|&&i| out.mask.flags[i] == 1).count();
            worst_cov = worst_cov.min(hit as f64 / burst.len() as f64);
        }
        println!("z={z}: worst clean fraction={worst_clean:.4}  worst burst coverage={worst_cov:.3}");
    }
}
