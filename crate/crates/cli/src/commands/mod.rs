pub mod denoise;
pub mod e2e;
pub mod eval;
pub mod synth;
pub mod train;

/// Stamp lines embedded as comments in every output file.
pub fn stamp(command: &str, seed: u64) -> Vec<String> {
    vec![format!("spear {command}"), format!("seed={seed}")]
}
