//! `spear synth`: one paired clean/noisy recording plus ground truth files.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use spear_core::io::{write_mask, write_peaks, write_signal};
use spear_core::synth::{corrupt, gen_clean, BeatTemplateParams, HrvMod, NoiseSpec};

use crate::EXIT_OK;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Output directory (created if missing)
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Base name for the output files
    #[arg(long, default_value = "synth")]
    pub name: String,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 180.0)]
    pub duration_s: f64,
    #[arg(long, default_value_t = 72.0)]
    pub hr_bpm: f64,
    /// Sinusoidal HR modulation depth in bpm
    #[arg(long, default_value_t = 4.0)]
    pub hrv_depth_bpm: f64,
    #[arg(long, default_value_t = 0.1)]
    pub hrv_freq_hz: f64,
    /// Baseline-wander amplitude relative to unit signal range
    #[arg(long, default_value_t = 0.4)]
    pub bw_amp: f64,
    #[arg(long, default_value_t = 0.15)]
    pub bw_freq_hz: f64,
    /// Max fractional beat-period perturbation inside bursts
    #[arg(long, default_value_t = 0.35)]
    pub fm_jitter: f64,
    #[arg(long, default_value_t = 2.5)]
    pub burst_amp: f64,
    #[arg(long, default_value_t = 10)]
    pub burst_count: usize,
    #[arg(long, default_value_t = 2.0)]
    pub burst_len_lo_s: f64,
    #[arg(long, default_value_t = 6.0)]
    pub burst_len_hi_s: f64,
}

pub fn run(args: SynthArgs) -> Result<i32> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let (clean, gt) = gen_clean(
        args.duration_s,
        args.hr_bpm,
        HrvMod { depth_bpm: args.hrv_depth_bpm, freq_hz: args.hrv_freq_hz },
        &BeatTemplateParams::default(),
        args.seed,
    )?;
    let spec = NoiseSpec {
        bw_amp: args.bw_amp,
        bw_freq_hz: args.bw_freq_hz,
        fm_jitter_frac: args.fm_jitter,
        burst_amp: args.burst_amp,
        burst_count: args.burst_count,
        burst_len_s: (args.burst_len_lo_s, args.burst_len_hi_s),
        seed: args.seed,
    };
    let (noisy, gt) = corrupt(&clean, &gt, &spec)?;

    let stamp = super::stamp(
        &format!(
            "synth --duration-s {} --hr-bpm {} --hrv-depth-bpm {} --hrv-freq-hz {} \
             --bw-amp {} --bw-freq-hz {} --fm-jitter {} --burst-amp {} --burst-count {} \
             --burst-len-lo-s {} --burst-len-hi-s {}",
            args.duration_s,
            args.hr_bpm,
            args.hrv_depth_bpm,
            args.hrv_freq_hz,
            args.bw_amp,
            args.bw_freq_hz,
            args.fm_jitter,
            args.burst_amp,
            args.burst_count,
            args.burst_len_lo_s,
            args.burst_len_hi_s
        ),
        args.seed,
    );

    let base = args.out_dir.join(&args.name);
    let path = |suffix: &str| PathBuf::from(format!("{}{suffix}", base.display()));
    write_signal(&path(".ppg.csv"), &clean, &stamp)?;
    write_signal(&path(".noisy.ppg.csv"), &noisy, &stamp)?;
    write_mask(&path(".mask.csv"), &gt.noise_mask, &stamp)?;
    write_peaks(&path(".peaks.csv"), &gt.peak_times_s, &stamp)?;

    println!(
        "wrote {}.{{ppg,noisy.ppg,mask,peaks}}.csv ({} samples, {} beats, {:.1}% corrupted)",
        base.display(),
        clean.len(),
        gt.peak_times_s.len(),
        100.0 * gt.noise_mask.corrupted_fraction()
    );
    Ok(EXIT_OK)
}
