//! Butterworth band-pass design and zero-phase filtering.
//!
//! The filter is designed as an analog low-pass prototype, band-pass
//! transformed, bilinear-mapped, and realized as a cascade of biquad
//! sections. Applied forward-backward the cascade has zero phase, which
//! keeps beat timing intact for HR/HRV work.

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid band: lo {0} Hz must be below hi {1} Hz")]
    BadBand(f64, f64),
    #[error("band edge {0} Hz out of range for fs {1} Hz")]
    EdgeOutOfRange(f64, f64),
}

/// One second-order section, direct form II transposed, `a0` normalized to 1.
#[derive(Debug, Clone, Copy)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
}

impl Biquad {
    pub fn process_in_place(&self, x: &mut [f64]) {
        let mut z1 = 0.0;
        let mut z2 = 0.0;
        for v in x.iter_mut() {
            let y = self.b0 * *v + z1;
            z1 = self.b1 * *v - self.a1 * y + z2;
            z2 = self.b2 * *v - self.a2 * y;
            *v = y;
        }
    }

    /// Transfer function value at digital frequency `theta` (rad/sample).
    fn response(&self, theta: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -theta);
        let z2 = z1 * z1;
        (self.b0 + self.b1 * z1 + self.b2 * z2) / (Complex64::new(1.0, 0.0) + self.a1 * z1 + self.a2 * z2)
    }
}

/// A cascade of biquad sections.
#[derive(Debug, Clone)]
pub struct SosFilter {
    pub sections: Vec<Biquad>,
}

impl SosFilter {
    pub fn filter_in_place(&self, x: &mut [f64]) {
        for section in &self.sections {
            section.process_in_place(x);
        }
    }

    /// Forward-backward application; the result has zero phase and squared
    /// magnitude response. Callers pad the signal to absorb edge transients.
    pub fn filtfilt(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.filter_in_place(&mut y);
        y.reverse();
        self.filter_in_place(&mut y);
        y.reverse();
        y
    }

    /// Magnitude response of a single pass at `freq_hz`.
    pub fn gain_at(&self, freq_hz: f64, fs: f64) -> f64 {
        let theta = 2.0 * std::f64::consts::PI * freq_hz / fs;
        self.sections
            .iter()
            .map(|s| s.response(theta).norm())
            .product()
    }
}

fn biquad_from_conjugate_pole(pole: Complex64, gain: f64) -> Biquad {
    Biquad {
        b0: gain,
        b1: 0.0,
        b2: -gain,
        a1: -2.0 * pole.re,
        a2: pole.norm_sqr(),
    }
}

fn biquad_from_real_poles(p1: f64, p2: f64, gain: f64) -> Biquad {
    Biquad {
        b0: gain,
        b1: 0.0,
        b2: -gain,
        a1: -(p1 + p2),
        a2: p1 * p2,
    }
}

/// Designs a Butterworth band-pass with `order` prototype poles (the cascade
/// has `order` biquads, i.e. `2*order` poles). Cutoffs are the usual -3 dB
/// points of a single pass.
pub fn butter_bandpass(
    order: usize,
    lo_hz: f64,
    hi_hz: f64,
    fs: f64,
) -> Result<SosFilter, FilterError> {
    assert!(order >= 1, "filter order must be at least 1");
    if !(lo_hz < hi_hz) {
        return Err(FilterError::BadBand(lo_hz, hi_hz));
    }
    if lo_hz <= 0.0 || hi_hz >= fs / 2.0 {
        return Err(FilterError::EdgeOutOfRange(if lo_hz <= 0.0 { lo_hz } else { hi_hz }, fs));
    }

    // Prewarped analog band edges for the bilinear transform.
    let w1 = (std::f64::consts::PI * lo_hz / fs).tan();
    let w2 = (std::f64::consts::PI * hi_hz / fs).tan();
    let w0_sq = w1 * w2;
    let bw = w2 - w1;

    // Low-pass prototype poles on the unit circle, left half plane.
    let n = order;
    let mut sections = Vec::with_capacity(n);
    let mut handled_real = false;
    for k in 0..n {
        let angle = std::f64::consts::PI * (2.0 * k as f64 + n as f64 + 1.0) / (2.0 * n as f64);
        let proto = Complex64::from_polar(1.0, angle);
        if proto.im.abs() < 1e-12 {
            // Real prototype pole (odd order): its two band-pass poles form
            // one section together.
            if handled_real {
                continue;
            }
            handled_real = true;
            let pb = proto * bw;
            let disc = pb * pb - 4.0 * w0_sq;
            let root = disc.sqrt();
            let s1 = (pb + root) / 2.0;
            let s2 = (pb - root) / 2.0;
            let z1 = bilinear(s1);
            let z2 = bilinear(s2);
            if z1.im.abs() < 1e-12 && z2.im.abs() < 1e-12 {
                sections.push(biquad_from_real_poles(z1.re, z2.re, 1.0));
            } else {
                // Complex conjugate pair split across s1/s2.
                sections.push(biquad_from_conjugate_pole(z1, 1.0));
            }
            continue;
        }
        if proto.im < 0.0 {
            // Conjugate of a pole already processed.
            continue;
        }
        // Complex prototype pole: two band-pass poles, each paired with its
        // conjugate (which arises from the conjugate prototype pole).
        let pb = proto * bw;
        let disc = pb * pb - 4.0 * w0_sq;
        let root = disc.sqrt();
        let s1 = (pb + root) / 2.0;
        let s2 = (pb - root) / 2.0;
        sections.push(biquad_from_conjugate_pole(bilinear(s1), 1.0));
        sections.push(biquad_from_conjugate_pole(bilinear(s2), 1.0));
    }

    let mut filter = SosFilter { sections };

    // Normalize to unit gain at the (warped) center frequency.
    let fc = (w0_sq.sqrt().atan()) * fs / std::f64::consts::PI;
    let g = filter.gain_at(fc, fs);
    let per_section = (1.0 / g).powf(1.0 / filter.sections.len() as f64);
    for s in &mut filter.sections {
        s.b0 *= per_section;
        s.b2 *= per_section;
    }
    Ok(filter)
}

fn bilinear(s: Complex64) -> Complex64 {
    (Complex64::new(1.0, 0.0) + s) / (Complex64::new(1.0, 0.0) - s)
}
