//! Synthetic PPG with known beat locations, plus a corruption stage
//! (baseline wander, in-band noise bursts, FM timing jitter) with an exact
//! ground-truth mask. Stands in for real corpora at desk scale.

use std::f64::consts::PI;

use thiserror::Error;

use crate::rng::Rng;
use crate::signal::{normalize_minmax, BinaryMask, Signal};

pub const FS: f64 = 64.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("heart rate range [{0}, {1}] bpm outside supported [30, 220]")]
    HrOutOfBounds(f64, f64),
    #[error("duration {0} s too short; need at least 30 s")]
    TooShort(f64),
    #[error("signal not normalized to [0, 1]")]
    NotNormalized,
    #[error("corruption budget exceeded")]
    CorruptionBudgetExceeded,
    #[error("could not place {0} non-overlapping bursts after 1000 attempts")]
    BurstPlacementFailed(usize),
}

/// Two-Gaussian beat template: a narrow systolic lobe plus a smaller,
/// delayed dicrotic lobe. Widths are Gaussian sigmas in seconds; the
/// dicrotic delay is a fraction of the local beat period.
#[derive(Debug, Clone)]
pub struct BeatTemplateParams {
    pub systolic_amp: f64,
    pub systolic_width_s: f64,
    pub dicrotic_amp: f64,
    pub dicrotic_width_s: f64,
    pub dicrotic_delay_frac: f64,
}

impl Default for BeatTemplateParams {
    fn default() -> Self {
        Self {
            systolic_amp: 1.0,
            systolic_width_s: 0.08,
            dicrotic_amp: 0.35,
            dicrotic_width_s: 0.12,
            dicrotic_delay_frac: 0.45,
        }
    }
}

/// Sinusoidal modulation of the heart-rate trajectory.
#[derive(Debug, Clone, Copy)]
pub struct HrvMod {
    pub depth_bpm: f64,
    pub freq_hz: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseSpec {
    /// Baseline-wander amplitude relative to the unit signal range.
    pub bw_amp: f64,
    pub bw_freq_hz: f64,
    /// Max fractional perturbation of the instantaneous beat period inside
    /// corrupted regions.
    pub fm_jitter_frac: f64,
    pub burst_amp: f64,
    pub burst_count: usize,
    pub burst_len_s: (f64, f64),
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            bw_amp: 0.3,
            bw_freq_hz: 0.2,
            fm_jitter_frac: 0.3,
            burst_amp: 2.0,
            burst_count: 2,
            burst_len_s: (2.0, 5.0),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Beat-peak times in seconds, strictly increasing.
    pub peak_times_s: Vec<f64>,
    pub noise_mask: BinaryMask,
    /// Instantaneous HR in bpm, sampled at the signal rate.
    pub hr_trajectory_bpm: Vec<f64>,
}

impl GroundTruth {
    pub fn rr_intervals_ms(&self) -> Vec<f64> {
        self.peak_times_s.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect()
    }
}

/// Cumulative beat count at time `t` for the modulated trajectory
/// `hr(t) = base + depth * sin(2 pi f t)`.
fn beat_phase(t: f64, base: f64, hrv: HrvMod) -> f64 {
    if hrv.depth_bpm == 0.0 || hrv.freq_hz == 0.0 {
        return base * t / 60.0;
    }
    let w = 2.0 * PI * hrv.freq_hz;
    (base * t + hrv.depth_bpm * (1.0 - (w * t).cos()) / w) / 60.0
}

pub(crate) fn hr_at(t: f64, base: f64, hrv: HrvMod) -> f64 {
    base + hrv.depth_bpm * (2.0 * PI * hrv.freq_hz * t).sin()
}

/// Solves `beat_phase(t) = target` by Newton iteration from `guess`.
fn solve_beat_time(target: f64, guess: f64, base: f64, hrv: HrvMod) -> f64 {
    let mut t = guess;
    for _ in 0..60 {
        let f = beat_phase(t, base, hrv) - target;
        let df = hr_at(t, base, hrv) / 60.0;
        let step = f / df;
        t -= step;
        if step.abs() < 1e-12 {
            break;
        }
    }
    t
}

/// Generates a clean synthetic PPG of `duration_s` seconds at 64 Hz.
///
/// Beat times follow the sinusoidally modulated HR trajectory exactly; the
/// seed only drives small per-beat amplitude variation, so the ground-truth
/// RR series is deterministic in the trajectory parameters.
pub fn gen_clean(
    duration_s: f64,
    hr_base_bpm: f64,
    hrv: HrvMod,
    template: &BeatTemplateParams,
    seed: u64,
) -> Result<(Signal, GroundTruth), SynthError> {
    let lo = hr_base_bpm - hrv.depth_bpm.abs();
    let hi = hr_base_bpm + hrv.depth_bpm.abs();
    if lo < 30.0 || hi > 220.0 {
        return Err(SynthError::HrOutOfBounds(lo, hi));
    }
    if duration_s < 30.0 {
        return Err(SynthError::TooShort(duration_s));
    }

    let mut rng = Rng::seed_from(seed);
    let n = (duration_s * FS).round() as usize;

    // Beat peaks at phase k + 1/2, so the first beat sits well inside the
    // record instead of on the boundary.
    let mut peaks = Vec::new();
    let mut guess = 30.0 / hr_base_bpm;
    let mut k = 0usize;
    loop {
        let t = solve_beat_time(k as f64 + 0.5, guess, hr_base_bpm, hrv);
        if t >= duration_s {
            break;
        }
        guess = t + 60.0 / hr_at(t, hr_base_bpm, hrv);
        peaks.push(t);
        k += 1;
    }

    let mut samples = vec![0.0; n];
    for (i, &t_peak) in peaks.iter().enumerate() {
        let rr = if i + 1 < peaks.len() {
            peaks[i + 1] - t_peak
        } else if i > 0 {
            t_peak - peaks[i - 1]
        } else {
            60.0 / hr_base_bpm
        };
        let sys_amp = template.systolic_amp * (1.0 + 0.05 * rng.symmetric());
        let dic_amp = template.dicrotic_amp * (1.0 + 0.05 * rng.symmetric());
        add_gaussian(&mut samples, t_peak, sys_amp, template.systolic_width_s);
        add_gaussian(
            &mut samples,
            t_peak + template.dicrotic_delay_frac * rr,
            dic_amp,
            template.dicrotic_width_s,
        );
    }

    let signal = normalize_minmax(&Signal::new(samples, FS)).expect("non-empty");

    // Keep peaks whose systolic lobe is fully inside the record.
    let margin = 0.2;
    let peak_times_s: Vec<f64> = peaks
        .into_iter()
        .filter(|&t| t >= margin && t <= duration_s - margin)
        .collect();
    let hr_trajectory_bpm = (0..n).map(|i| hr_at(i as f64 / FS, hr_base_bpm, hrv)).collect();

    Ok((
        signal,
        GroundTruth {
            peak_times_s,
            noise_mask: BinaryMask::zeros(n, FS),
            hr_trajectory_bpm,
        },
    ))
}

fn add_gaussian(samples: &mut [f64], center_s: f64, amp: f64, sigma_s: f64) {
    let half = 4.5 * sigma_s;
    let lo = (((center_s - half) * FS).floor().max(0.0)) as usize;
    let hi = ((((center_s + half) * FS).ceil()) as usize).min(samples.len());
    for i in lo..hi {
        let dt = i as f64 / FS - center_s;
        samples[i] += amp * (-0.5 * (dt / sigma_s) * (dt / sigma_s)).exp();
    }
}

struct Burst {
    start_s: f64,
    len_s: f64,
}

/// Corrupts a clean, normalized signal: global baseline wander plus
/// `burst_count` non-overlapping bursts of in-band noise with FM timing
/// jitter. The returned mask flags exactly the burst samples; ground-truth
/// peaks and HR trajectory are those of the clean signal.
pub fn corrupt(
    clean: &Signal,
    gt: &GroundTruth,
    spec: &NoiseSpec,
) -> Result<(Signal, GroundTruth), SynthError> {
    let min = clean.samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = clean.samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min < -1e-9 || max > 1.0 + 1e-9 {
        return Err(SynthError::NotNormalized);
    }

    let duration = clean.duration_s();
    let n = clean.len();
    let mut rng = Rng::seed_from(spec.seed);
    let bw_phase = rng.range_f64(0.0, 2.0 * PI);

    // Burst lengths first, then placement; both orders are part of the
    // deterministic stream.
    let lengths: Vec<f64> = (0..spec.burst_count)
        .map(|_| rng.range_f64(spec.burst_len_s.0, spec.burst_len_s.1))
        .collect();
    if lengths.iter().sum::<f64>() > 0.75 * duration {
        return Err(SynthError::CorruptionBudgetExceeded);
    }

    let mut bursts: Vec<Burst> = Vec::with_capacity(spec.burst_count);
    for &len in &lengths {
        let mut placed = false;
        for _ in 0..1000 {
            let start = rng.range_f64(0.0, duration - len);
            let overlaps = bursts
                .iter()
                .any(|b| start < b.start_s + b.len_s && b.start_s < start + len);
            if !overlaps {
                bursts.push(Burst { start_s: start, len_s: len });
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(SynthError::BurstPlacementFailed(spec.burst_count));
        }
    }

    let mut flags = vec![0u8; n];
    for b in &bursts {
        let lo = (b.start_s * FS).round() as usize;
        let hi = (((b.start_s + b.len_s) * FS).round() as usize).min(n);
        for f in &mut flags[lo..hi] {
            *f = 1;
        }
    }
    let mask = BinaryMask::new(flags, FS);
    if mask.corrupted_fraction() > 0.75 {
        return Err(SynthError::CorruptionBudgetExceeded);
    }

    let mut samples = clean.samples.clone();
    for b in &bursts {
        let lo = (b.start_s * FS).round() as usize;
        let hi = (((b.start_s + b.len_s) * FS).round() as usize).min(n);
        if hi <= lo {
            continue;
        }

        // FM jitter: warp time inside the burst, zero displacement at the
        // edges, peak displacement bounded by jitter_frac * local RR.
        let center_idx = ((lo + hi) / 2).min(n - 1);
        let rr_local = 60.0 / gt.hr_trajectory_bpm[center_idx].max(30.0);
        let warp_amp = spec.fm_jitter_frac * rr_local;
        let cycles = rng.range_usize(1, 2) as f64;
        let warp_phase = rng.range_f64(0.0, 2.0 * PI);

        // In-band noise components (1-8 Hz) with a tapered window.
        let n_comp = 6;
        let comps: Vec<(f64, f64, f64)> = (0..n_comp)
            .map(|_| (rng.range_f64(1.0, 8.0), rng.range_f64(0.3, 1.0), rng.range_f64(0.0, 2.0 * PI)))
            .collect();
        let amp_norm: f64 = comps.iter().map(|c| c.1).sum();

        let span = (hi - lo) as f64 / FS;
        for i in lo..hi {
            let t = i as f64 / FS;
            let u = (t - b.start_s) / span;
            let window = tukey(u, 0.15);
            let delta = warp_amp * window * (2.0 * PI * cycles * u + warp_phase).sin();
            let warped = sample_linear(&clean.samples, (t + delta) * FS);
            let noise: f64 = comps
                .iter()
                .map(|&(f, a, p)| a * (2.0 * PI * f * t + p).sin())
                .sum::<f64>()
                / amp_norm;
            samples[i] = warped + spec.burst_amp * window * noise;
        }
    }

    if spec.bw_amp != 0.0 {
        for (i, v) in samples.iter_mut().enumerate() {
            let t = i as f64 / FS;
            *v += spec.bw_amp * (2.0 * PI * spec.bw_freq_hz * t + bw_phase).sin();
        }
    }

    let noisy = normalize_minmax(&Signal::new(samples, FS)).expect("non-empty");
    Ok((
        noisy,
        GroundTruth {
            peak_times_s: gt.peak_times_s.clone(),
            noise_mask: mask,
            hr_trajectory_bpm: gt.hr_trajectory_bpm.clone(),
        },
    ))
}

/// Flat-top window with cosine tapers of width `taper` at each end; keeps
/// burst edges continuous without weakening the burst interior.
fn tukey(u: f64, taper: f64) -> f64 {
    if u < 0.0 || u > 1.0 {
        0.0
    } else if u < taper {
        0.5 * (1.0 - (PI * u / taper).cos())
    } else if u > 1.0 - taper {
        0.5 * (1.0 - (PI * (1.0 - u) / taper).cos())
    } else {
        1.0
    }
}

fn sample_linear(samples: &[f64], pos: f64) -> f64 {
    if pos <= 0.0 {
        return samples[0];
    }
    let last = samples.len() - 1;
    if pos >= last as f64 {
        return samples[last];
    }
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    samples[i] * (1.0 - frac) + samples[i + 1] * frac
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_hrv() -> HrvMod {
        HrvMod { depth_bpm: 0.0, freq_hz: 0.0 }
    }

    #[test]
    fn sixty_bpm_gives_one_peak_per_second() {
        let (sig, gt) =
            gen_clean(60.0, 60.0, no_hrv(), &BeatTemplateParams::default(), 1).unwrap();
        assert_eq!(sig.len(), 3840);
        assert!((gt.peak_times_s.len() as i64 - 60).abs() <= 1, "{}", gt.peak_times_s.len());
        for rr in gt.rr_intervals_ms() {
            assert!((rr - 1000.0).abs() < 1e-6, "rr {rr}");
        }
    }

    #[test]
    fn one_twenty_bpm_thirty_seconds() {
        let (_, gt) = gen_clean(30.0, 120.0, no_hrv(), &BeatTemplateParams::default(), 2).unwrap();
        assert!((gt.peak_times_s.len() as i64 - 60).abs() <= 1, "{}", gt.peak_times_s.len());
    }

    #[test]
    fn peaks_match_local_maxima_within_one_sample() {
        let (sig, gt) = gen_clean(
            40.0,
            72.0,
            HrvMod { depth_bpm: 5.0, freq_hz: 0.1 },
            &BeatTemplateParams::default(),
            3,
        )
        .unwrap();
        assert!(!gt.peak_times_s.is_empty());
        for &t in &gt.peak_times_s {
            let center = (t * FS).round() as isize;
            let lo = (center - 6).max(0) as usize;
            let hi = ((center + 7) as usize).min(sig.len());
            let argmax = (lo..hi)
                .max_by(|&a, &b| sig.samples[a].partial_cmp(&sig.samples[b]).unwrap())
                .unwrap();
            let err_samples = (argmax as f64 - t * FS).abs();
            assert!(err_samples <= 1.0 + 1e-9, "peak at {t}: off by {err_samples} samples");
        }
    }

    /// Brute-force oracle: integrate the HR trajectory on a fine grid and
    /// emit beat times at each half-integer phase crossing.
    fn brute_force_rr(duration: f64, base: f64, hrv: HrvMod) -> Vec<f64> {
        let dt = 1e-5;
        let mut phase = 0.0;
        let mut next = 0.5;
        let mut t = 0.0;
        let mut peaks = Vec::new();
        while t < duration {
            phase += hr_at(t, base, hrv) / 60.0 * dt;
            t += dt;
            if phase >= next {
                peaks.push(t);
                next += 1.0;
            }
        }
        peaks.windows(2).map(|w| (w[1] - w[0]) * 1000.0).collect()
    }

    fn sdnn(rr: &[f64]) -> f64 {
        let mean = rr.iter().sum::<f64>() / rr.len() as f64;
        (rr.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / rr.len() as f64).sqrt()
    }

    #[test]
    fn generated_sdnn_matches_analytic_trajectory() {
        let hrv = HrvMod { depth_bpm: 6.0, freq_hz: 0.1 };
        let (_, gt) = gen_clean(60.0, 60.0, hrv, &BeatTemplateParams::default(), 4).unwrap();
        let got = sdnn(&gt.rr_intervals_ms());
        let want = sdnn(&brute_force_rr(60.0, 60.0, hrv));
        let rel = (got - want).abs() / want;
        assert!(rel < 0.05, "sdnn {got} vs analytic {want} (rel {rel})");
    }

    #[test]
    fn hr_bounds_are_enforced() {
        assert!(matches!(
            gen_clean(30.0, 25.0, no_hrv(), &BeatTemplateParams::default(), 0),
            Err(SynthError::HrOutOfBounds(_, _))
        ));
        assert!(matches!(
            gen_clean(
                30.0,
                218.0,
                HrvMod { depth_bpm: 5.0, freq_hz: 0.1 },
                &BeatTemplateParams::default(),
                0
            ),
            Err(SynthError::HrOutOfBounds(_, _))
        ));
    }

    #[test]
    fn corrupt_identity_when_nothing_requested() {
        let (sig, gt) = gen_clean(30.0, 70.0, no_hrv(), &BeatTemplateParams::default(), 5).unwrap();
        let spec = NoiseSpec { bw_amp: 0.0, burst_count: 0, seed: 9, ..NoiseSpec::default() };
        let (noisy, gt2) = corrupt(&sig, &gt, &spec).unwrap();
        assert_eq!(noisy.samples, sig.samples);
        assert!(gt2.noise_mask.is_all_zero());
    }

    #[test]
    fn single_burst_mask_fraction() {
        let (sig, gt) = gen_clean(30.0, 70.0, no_hrv(), &BeatTemplateParams::default(), 6).unwrap();
        let spec = NoiseSpec {
            burst_count: 1,
            burst_len_s: (5.0, 5.0),
            seed: 10,
            ..NoiseSpec::default()
        };
        let (_, gt2) = corrupt(&sig, &gt, &spec).unwrap();
        let frac = gt2.noise_mask.corrupted_fraction();
        assert!((frac - 5.0 / 30.0).abs() < 0.01, "fraction {frac}");
    }

    #[test]
    fn budget_cap_is_enforced() {
        let (sig, gt) = gen_clean(30.0, 70.0, no_hrv(), &BeatTemplateParams::default(), 7).unwrap();
        let spec = NoiseSpec {
            burst_count: 5,
            burst_len_s: (5.0, 5.0),
            seed: 11,
            ..NoiseSpec::default()
        };
        assert!(matches!(
            corrupt(&sig, &gt, &spec),
            Err(SynthError::CorruptionBudgetExceeded)
        ));
    }

    #[test]
    fn corruption_is_seed_reproducible() {
        let (sig, gt) = gen_clean(
            60.0,
            80.0,
            HrvMod { depth_bpm: 4.0, freq_hz: 0.15 },
            &BeatTemplateParams::default(),
            8,
        )
        .unwrap();
        let spec = NoiseSpec { burst_count: 3, seed: 21, ..NoiseSpec::default() };
        let (a, ga) = corrupt(&sig, &gt, &spec).unwrap();
        let (b, gb) = corrupt(&sig, &gt, &spec).unwrap();
        assert_eq!(a.samples, b.samples);
        assert_eq!(ga.noise_mask, gb.noise_mask);

        let (c, _) = corrupt(&sig, &gt, &NoiseSpec { seed: 22, ..spec }).unwrap();
        assert_ne!(a.samples, c.samples);
    }

    #[test]
    fn clean_regions_only_see_the_affine_renormalization() {
        let (sig, gt) = gen_clean(60.0, 80.0, no_hrv(), &BeatTemplateParams::default(), 12).unwrap();
        let spec = NoiseSpec { bw_amp: 0.0, burst_count: 2, seed: 31, ..NoiseSpec::default() };
        let (noisy, gt2) = corrupt(&sig, &gt, &spec).unwrap();
        // Fit the affine map from two distinct clean samples, verify it on
        // all the rest.
        let clean_idx: Vec<usize> = (0..sig.len())
            .filter(|&i| gt2.noise_mask.flags[i] == 0)
            .collect();
        let i0 = clean_idx[0];
        let i1 = *clean_idx
            .iter()
            .find(|&&i| (sig.samples[i] - sig.samples[i0]).abs() > 0.1)
            .unwrap();
        let scale = (noisy.samples[i1] - noisy.samples[i0]) / (sig.samples[i1] - sig.samples[i0]);
        let offset = noisy.samples[i0] - scale * sig.samples[i0];
        for &i in &clean_idx {
            let want = scale * sig.samples[i] + offset;
            assert!((noisy.samples[i] - want).abs() < 1e-9);
        }
    }
}
