//! Peak detection, windowed heart-rate estimation, MAE scoring, and HRV
//! metrics (SDNN, RMSSD) with interquartile-range interval filtering.

use serde::Serialize;
use thiserror::Error;

use crate::detect::DetectorKind;
use crate::nn::DaeModel;
use crate::pipeline::{bandpass, dae_direct_denoise, denoise_recording, PipelineError};
use crate::signal::{normalize_minmax, JoinedSignal, Signal};
use crate::synth::GroundTruth;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("signal too short for peak detection: {0} s")]
    TooShort(f64),
    #[error("insufficient intervals: {got} (need {need})")]
    InsufficientIntervals { got: usize, need: usize },
    #[error("zero comparable windows")]
    NoComparableWindows,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

/// Ordered beat-peak times with their successive differences.
#[derive(Debug, Clone)]
pub struct BeatSeries {
    pub peak_times_s: Vec<f64>,
    pub rr_intervals_ms: Vec<f64>,
}

impl BeatSeries {
    pub fn from_times(peak_times_s: Vec<f64>) -> Self {
        let rr_intervals_ms = peak_times_s
            .windows(2)
            .map(|w| (w[1] - w[0]) * 1000.0)
            .collect();
        Self { peak_times_s, rr_intervals_ms }
    }
}

// Two-moving-average beat detection constants: a 111 ms window tracks the
// systolic peak, a 667 ms window tracks the whole beat, and the beat average
// plus a small offset proportional to the mean squared signal forms the
// dynamic threshold.
const MA_PEAK_S: f64 = 0.111;
const MA_BEAT_S: f64 = 0.667;
const THRESHOLD_BETA: f64 = 0.02;
// Blocks whose maximum falls below this fraction of the 75th-percentile
// block maximum in their 10 s neighborhood are dicrotic waves, not beats.
// With the 0.9 Hz low cutoff the beat fundamental disappears below 54 bpm
// and the dicrotic wave would otherwise register as a second beat. The
// reference is local so that regions of genuinely smaller beats (e.g.
// reconstructed stretches) are judged against their own surroundings.
const BLOCK_AMP_GATE: f64 = 0.35;
const BLOCK_GATE_NEIGHBORHOOD_S: f64 = 10.0;
// Local gain window for normalizing the squared signal before block
// detection. Reconstructed stretches come out of the autoencoder with
// damped amplitude; without the local normalization their beats fall under
// the beat-average threshold and disappear. The window must exceed the
// dicrotic delay (up to ~0.8 s at low HR) so dicrotic waves are still
// referenced against their own systolic peak.
const AGC_HALF_WINDOW_S: f64 = 2.5;

fn moving_average(x: &[f64], window: usize) -> Vec<f64> {
    // Centered window, shrinking at the edges.
    let n = x.len();
    let half = window / 2;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for &v in x {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(n);
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

/// Centered moving maximum via monotonic deques (prefix/suffix max blocks).
fn moving_max(x: &[f64], half: usize) -> Vec<f64> {
    let n = x.len();
    let mut out = vec![0.0; n];
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for i in 0..n + half {
        if i < n {
            while let Some(&back) = deque.back() {
                if x[back] <= x[i] {
                    deque.pop_back();
                } else {
                    break;
                }
            }
            deque.push_back(i);
        }
        if i >= half {
            let center = i - half;
            while let Some(&front) = deque.front() {
                if front + half < center {
                    deque.pop_front();
                } else {
                    break;
                }
            }
            out[center] = x[*deque.front().unwrap()];
        }
    }
    out
}

/// Systolic peak detection by the two-moving-average method: the signal is
/// demeaned, clipped to its positive part, and squared; blocks where the
/// short average exceeds the long-average threshold and that are wider than
/// the short window become beats, each peaking at the block maximum.
pub fn detect_peaks(signal: &Signal) -> Result<BeatSeries, MetricsError> {
    if signal.duration_s() < 2.0 {
        return Err(MetricsError::TooShort(signal.duration_s()));
    }
    let n = signal.len();
    let mean = signal.samples.iter().sum::<f64>() / n as f64;
    let mut squared: Vec<f64> = signal
        .samples
        .iter()
        .map(|&v| {
            let d = (v - mean).max(0.0);
            d * d
        })
        .collect();

    // Local gain normalization; the epsilon keeps flat stretches at zero.
    let global_max = squared.iter().cloned().fold(0.0f64, f64::max);
    if global_max > 0.0 {
        let gains = moving_max(&squared, (AGC_HALF_WINDOW_S * signal.fs).round() as usize);
        let floor = 1e-6 * global_max;
        for (v, g) in squared.iter_mut().zip(&gains) {
            *v /= g.max(floor);
        }
    }

    let w_peak = ((MA_PEAK_S * signal.fs).round() as usize).max(1) | 1;
    let w_beat = ((MA_BEAT_S * signal.fs).round() as usize).max(3) | 1;
    let ma_peak = moving_average(&squared, w_peak);
    let ma_beat = moving_average(&squared, w_beat);
    let offset = THRESHOLD_BETA * squared.iter().sum::<f64>() / n as f64;

    let mut blocks: Vec<(usize, f64)> = Vec::new();
    let mut block_start = None;
    for i in 0..=n {
        let active = i < n && ma_peak[i] > ma_beat[i] + offset;
        match (active, block_start) {
            (true, None) => block_start = Some(i),
            (false, Some(s)) => {
                if i - s >= w_peak {
                    let argmax = (s..i)
                        .max_by(|&a, &b| squared[a].partial_cmp(&squared[b]).unwrap())
                        .unwrap();
                    blocks.push((argmax, squared[argmax]));
                }
                block_start = None;
            }
            _ => {}
        }
    }

    let neighborhood = (BLOCK_GATE_NEIGHBORHOOD_S * signal.fs) as usize;
    let p75 = |values: &mut Vec<f64>| {
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = (values.len() - 1) as f64 * 0.75;
        let lo = pos.floor() as usize;
        values[lo] + (pos - lo as f64) * (values[pos.ceil() as usize] - values[lo])
    };
    let peaks = blocks
        .iter()
        .filter(|&&(idx, val)| {
            let mut near: Vec<f64> = blocks
                .iter()
                .filter(|&&(other, _)| other.abs_diff(idx) <= neighborhood)
                .map(|b| b.1)
                .collect();
            val >= BLOCK_AMP_GATE * p75(&mut near)
        })
        .map(|b| signal.t0 + b.0 as f64 / signal.fs)
        .collect();
    Ok(BeatSeries::from_times(peaks))
}

/// Greedy matching of estimated peaks to ground-truth peaks within
/// `tol_s`; each peak is used at most once.
pub fn match_peaks(est: &[f64], truth: &[f64], tol_s: f64) -> usize {
    let mut matched = 0;
    let mut j = 0;
    for &t in truth {
        while j < est.len() && est[j] < t - tol_s {
            j += 1;
        }
        if j < est.len() && (est[j] - t).abs() <= tol_s {
            matched += 1;
            j += 1;
        }
    }
    matched
}

#[derive(Debug, Clone, Copy)]
pub struct HrWindowConfig {
    pub window_s: f64,
    pub step_s: f64,
}

impl Default for HrWindowConfig {
    fn default() -> Self {
        // 8 s windows with 6 s overlap.
        Self { window_s: 8.0, step_s: 2.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HrvWindowConfig {
    pub window_s: f64,
    pub step_s: f64,
}

impl Default for HrvWindowConfig {
    fn default() -> Self {
        // 5 min windows with 95% overlap.
        Self { window_s: 300.0, step_s: 15.0 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HrWindow {
    pub t_start: f64,
    pub bpm: Option<f64>,
}

/// Sanity bounds: windows whose mean rate falls outside are reported as
/// missing rather than fed into MAE.
const BPM_MIN: f64 = 20.0;
const BPM_MAX: f64 = 300.0;

fn window_fully_covered(t0: f64, t1: f64, spans: &[(f64, f64)]) -> bool {
    spans.iter().any(|&(lo, hi)| t0 >= lo - 1e-9 && t1 <= hi + 1e-9)
}

/// Per-window HR from intervals fully inside each window. Windows with
/// fewer than two peaks, an implausible mean rate, or that straddle a
/// provenance discontinuity (are not covered by a single contiguous span)
/// come back as missing.
pub fn estimate_hr_windows(
    beats: &BeatSeries,
    duration_s: f64,
    cfg: &HrWindowConfig,
    valid_spans: &[(f64, f64)],
) -> Vec<HrWindow> {
    let mut windows = Vec::new();
    let mut t = 0.0;
    while t + cfg.window_s <= duration_s + 1e-9 {
        let t_end = t + cfg.window_s;
        let bpm = if !window_fully_covered(t, t_end, valid_spans) {
            None
        } else {
            let rrs: Vec<f64> = beats
                .peak_times_s
                .windows(2)
                .filter(|w| w[0] >= t - 1e-9 && w[1] <= t_end + 1e-9)
                .map(|w| (w[1] - w[0]) * 1000.0)
                .collect();
            if rrs.is_empty() {
                None
            } else {
                let mean_rr = rrs.iter().sum::<f64>() / rrs.len() as f64;
                let bpm = 60000.0 / mean_rr;
                (BPM_MIN..=BPM_MAX).contains(&bpm).then_some(bpm)
            }
        };
        windows.push(HrWindow { t_start: t, bpm });
        t += cfg.step_s;
    }
    windows
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct MaeResult {
    pub mae: f64,
    pub windows_used: usize,
    pub windows_dropped: usize,
}

/// Mean absolute error over index-aligned windows, dropping pairs where
/// either side is missing.
pub fn mae(est: &[Option<f64>], truth: &[Option<f64>]) -> Result<MaeResult, MetricsError> {
    assert_eq!(est.len(), truth.len(), "window grids must align");
    let mut sum = 0.0;
    let mut used = 0;
    for (e, t) in est.iter().zip(truth) {
        if let (Some(e), Some(t)) = (e, t) {
            sum += (e - t).abs();
            used += 1;
        }
    }
    if used == 0 {
        return Err(MetricsError::NoComparableWindows);
    }
    Ok(MaeResult {
        mae: sum / used as f64,
        windows_used: used,
        windows_dropped: est.len() - used,
    })
}

/// Quartile by linear interpolation over the sorted values.
fn quartile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Keeps intervals within the Tukey fences [Q1 - 1.5 IQR, Q3 + 1.5 IQR];
/// order and multiplicity are preserved.
pub fn iqr_filter(rr_ms: &[f64]) -> Result<Vec<f64>, MetricsError> {
    if rr_ms.len() < 4 {
        return Err(MetricsError::InsufficientIntervals { got: rr_ms.len(), need: 4 });
    }
    let mut sorted = rr_ms.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let q1 = quartile(&sorted, 0.25);
    let q3 = quartile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo = q1 - 1.5 * iqr;
    let hi = q3 + 1.5 * iqr;
    Ok(rr_ms.iter().cloned().filter(|&v| v >= lo && v <= hi).collect())
}

/// Population standard deviation of the intervals, in ms.
pub fn sdnn(rr_ms: &[f64]) -> Result<f64, MetricsError> {
    if rr_ms.len() < 2 {
        return Err(MetricsError::InsufficientIntervals { got: rr_ms.len(), need: 2 });
    }
    let n = rr_ms.len() as f64;
    let mean = rr_ms.iter().sum::<f64>() / n;
    let var = rr_ms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

/// Root mean square of successive interval differences, in ms.
pub fn rmssd(rr_ms: &[f64]) -> Result<f64, MetricsError> {
    if rr_ms.len() < 2 {
        return Err(MetricsError::InsufficientIntervals { got: rr_ms.len(), need: 2 });
    }
    let sq_sum: f64 = rr_ms.windows(2).map(|w| (w[1] - w[0]) * (w[1] - w[0])).sum();
    Ok((sq_sum / (rr_ms.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy)]
pub struct HrvWindow {
    pub t_start: f64,
    pub sdnn_ms: Option<f64>,
    pub rmssd_ms: Option<f64>,
}

/// HRV metrics per sliding window, after IQR interval filtering. Windows
/// longer than the recording clamp to a single full-recording window, so
/// short desk-scale recordings still produce one estimate.
pub fn estimate_hrv_windows(
    beats: &BeatSeries,
    duration_s: f64,
    cfg: &HrvWindowConfig,
    valid_spans: &[(f64, f64)],
) -> Vec<HrvWindow> {
    let window_s = cfg.window_s.min(duration_s);
    let mut windows = Vec::new();
    let mut t = 0.0;
    loop {
        let t_end = t + window_s;
        if t_end > duration_s + 1e-9 {
            break;
        }
        let value = if window_fully_covered(t, t_end, valid_spans) {
            let rrs: Vec<f64> = beats
                .peak_times_s
                .windows(2)
                .filter(|w| w[0] >= t - 1e-9 && w[1] <= t_end + 1e-9)
                .map(|w| (w[1] - w[0]) * 1000.0)
                .collect();
            iqr_filter(&rrs).ok().and_then(|kept| {
                match (sdnn(&kept), rmssd(&kept)) {
                    (Ok(s), Ok(r)) => Some((s, r)),
                    _ => None,
                }
            })
        } else {
            None
        };
        windows.push(HrvWindow {
            t_start: t,
            sdnn_ms: value.map(|v| v.0),
            rmssd_ms: value.map(|v| v.1),
        });
        if window_s >= duration_s {
            break;
        }
        t += cfg.step_s;
    }
    windows
}

// --- evaluation harness ------------------------------------------------------

/// Per-variant absolute errors against ground truth, pooled across windows.
#[derive(Debug, Clone, Serialize)]
pub struct VariantEval {
    pub name: String,
    pub hr_abs_errors: Vec<f64>,
    pub hr_windows_dropped: usize,
    pub sdnn_abs_errors: Vec<f64>,
    pub rmssd_abs_errors: Vec<f64>,
    pub hrv_windows_dropped: usize,
}

impl VariantEval {
    pub fn hr_mae(&self) -> f64 {
        mean(&self.hr_abs_errors)
    }

    pub fn sdnn_mae(&self) -> f64 {
        mean(&self.sdnn_abs_errors)
    }

    pub fn rmssd_mae(&self) -> f64 {
        mean(&self.rmssd_abs_errors)
    }
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        f64::NAN
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Maps peak times from joined-output time back to source-recording time
/// and returns the source-time spans the output covers.
fn to_source_time(peaks: &[f64], joined: &JoinedSignal) -> (Vec<f64>, Vec<(f64, f64)>) {
    let fs = joined.signal.fs;
    let mut mapped = Vec::with_capacity(peaks.len());
    for &t in peaks {
        let sample = t * fs;
        for region in &joined.regions {
            let lo = region.start_sample as f64;
            let hi = (region.start_sample + region.len) as f64;
            if sample >= lo && sample < hi {
                mapped.push(region.source_t0 + (sample - lo) / fs);
                break;
            }
        }
    }
    // Merge adjacent source segments into contiguous spans.
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for region in &joined.regions {
        let start = region.source_t0;
        let end = region.source_t0 + region.len as f64 / fs;
        match spans.last_mut() {
            Some(last) if (last.1 - start).abs() < 1e-9 => last.1 = end,
            _ => spans.push((start, end)),
        }
    }
    (mapped, spans)
}

fn pool_errors(
    est: &[HrWindow],
    truth: &[HrWindow],
) -> (Vec<f64>, usize) {
    let mut errors = Vec::new();
    let mut dropped = 0;
    for (e, t) in est.iter().zip(truth) {
        match (e.bpm, t.bpm) {
            (Some(e), Some(t)) => errors.push((e - t).abs()),
            _ => dropped += 1,
        }
    }
    (errors, dropped)
}

fn eval_one_variant(
    name: &str,
    beats_source_time: &BeatSeries,
    spans: &[(f64, f64)],
    gt_hr: &[HrWindow],
    gt_hrv: &[HrvWindow],
    duration_s: f64,
) -> VariantEval {
    let hr = estimate_hr_windows(beats_source_time, duration_s, &HrWindowConfig::default(), spans);
    let (hr_abs_errors, hr_windows_dropped) = pool_errors(&hr, gt_hr);

    let hrv = estimate_hrv_windows(beats_source_time, duration_s, &HrvWindowConfig::default(), spans);
    let mut sdnn_abs_errors = Vec::new();
    let mut rmssd_abs_errors = Vec::new();
    let mut hrv_windows_dropped = 0;
    for (e, t) in hrv.iter().zip(gt_hrv) {
        match (e.sdnn_ms, e.rmssd_ms, t.sdnn_ms, t.rmssd_ms) {
            (Some(es), Some(er), Some(ts), Some(tr)) => {
                sdnn_abs_errors.push((es - ts).abs());
                rmssd_abs_errors.push((er - tr).abs());
            }
            _ => hrv_windows_dropped += 1,
        }
    }

    VariantEval {
        name: name.to_string(),
        hr_abs_errors,
        hr_windows_dropped,
        sdnn_abs_errors,
        rmssd_abs_errors,
        hrv_windows_dropped,
    }
}

/// Evaluates the denoising variants on one paired clean/noisy recording:
/// the raw noisy signal, band-pass only, an optional whole-signal
/// autoencoder baseline, and the full erase-reconstruct path. Ground truth
/// comes from the known beat times of the clean signal.
pub fn eval_harness(
    noisy: &Signal,
    gt: &GroundTruth,
    model: &DaeModel,
    detector: &DetectorKind,
    sim_noise_model: Option<&DaeModel>,
) -> Result<Vec<VariantEval>, MetricsError> {
    let duration = noisy.duration_s();
    let full_span = [(0.0, duration)];
    let gt_beats = BeatSeries::from_times(gt.peak_times_s.clone());
    let gt_hr = estimate_hr_windows(&gt_beats, duration, &HrWindowConfig::default(), &full_span);
    let gt_hrv = estimate_hrv_windows(&gt_beats, duration, &HrvWindowConfig::default(), &full_span);

    let mut variants = Vec::new();

    let raw = normalize_minmax(noisy).map_err(PipelineError::from)?;
    let raw_beats = detect_peaks(&raw)?;
    variants.push(eval_one_variant("raw", &raw_beats, &full_span, &gt_hr, &gt_hrv, duration));

    let filtered = bandpass(noisy, 0.9, 5.0)?;
    let filtered_beats = detect_peaks(&filtered)?;
    variants.push(eval_one_variant(
        "bandpass",
        &filtered_beats,
        &full_span,
        &gt_hr,
        &gt_hrv,
        duration,
    ));

    if let Some(sim_model) = sim_noise_model {
        let joined = dae_direct_denoise(noisy, sim_model)?;
        let filtered = crate::pipeline::bandpass_joined(&joined, 0.9, 5.0)?;
        let beats = detect_peaks(&filtered.signal)?;
        let (mapped, spans) = to_source_time(&beats.peak_times_s, &filtered);
        let beats = BeatSeries::from_times(mapped);
        variants.push(eval_one_variant("dae_sim_noise", &beats, &spans, &gt_hr, &gt_hrv, duration));
    }

    let (denoised, _) = denoise_recording(noisy, model, detector)?;
    let beats = detect_peaks(&denoised.signal)?;
    let (mapped, spans) = to_source_time(&beats.peak_times_s, &denoised);
    let beats = BeatSeries::from_times(mapped);
    variants.push(eval_one_variant("spear", &beats, &spans, &gt_hr, &gt_hrv, duration));

    Ok(variants)
}

/// Pools per-recording variant evaluations (matched by name) into one.
pub fn pool_variants(per_recording: &[Vec<VariantEval>]) -> Vec<VariantEval> {
    let mut pooled: Vec<VariantEval> = Vec::new();
    for recording in per_recording {
        for variant in recording {
            match pooled.iter_mut().find(|v| v.name == variant.name) {
                Some(p) => {
                    p.hr_abs_errors.extend_from_slice(&variant.hr_abs_errors);
                    p.hr_windows_dropped += variant.hr_windows_dropped;
                    p.sdnn_abs_errors.extend_from_slice(&variant.sdnn_abs_errors);
                    p.rmssd_abs_errors.extend_from_slice(&variant.rmssd_abs_errors);
                    p.hrv_windows_dropped += variant.hrv_windows_dropped;
                }
                None => pooled.push(variant.clone()),
            }
        }
    }
    pooled
}
