//! Central finite-difference gradient checking.
//!
//! The numeric side only ever calls a forward closure, so it stays
//! independent of the analytic backward passes it is used to verify.

/// Maximum relative error between `analytic` gradients and central finite
/// differences of `f` over the entries of `x`.
///
/// Relative error uses `|a - n| / max(|a|, |n|, floor)` with a floor of 1e-3:
/// absolute disagreements above ~1e-8 still register, while round-off noise
/// on near-zero gradients does not.
pub fn max_rel_err(
    f: &mut dyn FnMut(&[f64]) -> f64,
    x: &mut [f64],
    analytic: &[f64],
    h: f64,
) -> f64 {
    assert_eq!(x.len(), analytic.len());
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let orig = x[i];
        x[i] = orig + h;
        let f_plus = f(x);
        x[i] = orig - h;
        let f_minus = f(x);
        x[i] = orig;
        let numeric = (f_plus - f_minus) / (2.0 * h);
        let denom = analytic[i].abs().max(numeric.abs()).max(1e-3);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}

pub const DEFAULT_H: f64 = 1e-4;
pub const TOLERANCE: f64 = 1e-5;
