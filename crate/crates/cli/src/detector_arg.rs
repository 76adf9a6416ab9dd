//! Parsing of the `--detector` flag shared by `denoise` and `train`.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use spear_core::detect::DetectorKind;
use spear_core::io::read_mask;

/// `oracle` (sibling `.mask.csv` of the input), `oracle:<path>`,
/// `heuristic`, or `external:<path>`.
#[derive(Debug, Clone)]
pub enum DetectorArg {
    Oracle(Option<PathBuf>),
    Heuristic,
    External(PathBuf),
}

impl std::str::FromStr for DetectorArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "heuristic" {
            return Ok(DetectorArg::Heuristic);
        }
        if s == "oracle" {
            return Ok(DetectorArg::Oracle(None));
        }
        if let Some(path) = s.strip_prefix("oracle:") {
            return Ok(DetectorArg::Oracle(Some(PathBuf::from(path))));
        }
        if let Some(path) = s.strip_prefix("external:") {
            return Ok(DetectorArg::External(PathBuf::from(path)));
        }
        Err(format!(
            "unknown detector {s:?}; expected oracle[:<mask>], heuristic, or external:<mask>"
        ))
    }
}

/// The mask file `spear synth` writes next to `<name>.noisy.ppg.csv` /
/// `<name>.ppg.csv`.
fn sibling_mask(input: &Path) -> PathBuf {
    let name = input.file_name().and_then(|n| n.to_str()).unwrap_or("");
    let base = name
        .strip_suffix(".noisy.ppg.csv")
        .or_else(|| name.strip_suffix(".ppg.csv"))
        .unwrap_or(name);
    input.with_file_name(format!("{base}.mask.csv"))
}

impl DetectorArg {
    /// Builds the detector, reading mask files relative to `input` when the
    /// oracle form has no explicit path.
    pub fn build(&self, input: &Path) -> Result<DetectorKind> {
        match self {
            DetectorArg::Heuristic => Ok(DetectorKind::heuristic()),
            DetectorArg::Oracle(path) => {
                let mask_path = match path {
                    Some(p) => p.clone(),
                    None => {
                        let p = sibling_mask(input);
                        if !p.exists() {
                            bail!(
                                "oracle detector: no mask file at {}; pass oracle:<path>",
                                p.display()
                            );
                        }
                        p
                    }
                };
                let mask = read_mask(&mask_path)
                    .with_context(|| format!("reading oracle mask {}", mask_path.display()))?;
                Ok(DetectorKind::oracle(mask))
            }
            DetectorArg::External(path) => DetectorKind::external_from_file(path)
                .with_context(|| format!("reading external mask {}", path.display())),
        }
    }
}
