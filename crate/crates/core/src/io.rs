//! Readers and writers for the text formats the tools exchange.
//!
//! `ppgcsv`: line 1 is `fs=<integer Hz>`, every following line one decimal
//! sample value. A companion mask file has the same header and one `0`/`1`
//! per line. A peaks file holds one peak time in seconds per line. Lines
//! starting with `#` are comments (writers use them to embed the command and
//! seed that produced the file) and are skipped by all readers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::signal::{BinaryMask, Signal};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}: missing fs=<Hz> header")]
    MissingHeader { path: String },
    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },
    #[error("{path}: empty file")]
    Empty { path: String },
}

fn parse_header(path: &str, line_no: usize, line: &str) -> Result<f64, IoError> {
    let rest = line
        .strip_prefix("fs=")
        .ok_or_else(|| IoError::MissingHeader { path: path.to_string() })?;
    let fs: u64 = rest.trim().parse().map_err(|_| IoError::Parse {
        path: path.to_string(),
        line: line_no,
        msg: format!("bad sampling rate {rest:?}"),
    })?;
    Ok(fs as f64)
}

/// Lines of a file with comment lines removed, paired with 1-based numbers.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn read_signal(path: &Path) -> Result<Signal, IoError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut lines = data_lines(&text);
    let (line_no, header) = lines.next().ok_or(IoError::Empty { path: name.clone() })?;
    let fs = parse_header(&name, line_no, header)?;
    let mut samples = Vec::new();
    for (line_no, line) in lines {
        let v: f64 = line.parse().map_err(|_| IoError::Parse {
            path: name.clone(),
            line: line_no,
            msg: format!("bad sample {line:?}"),
        })?;
        samples.push(v);
    }
    if samples.is_empty() {
        return Err(IoError::Empty { path: name });
    }
    Ok(Signal::new(samples, fs))
}

/// Writes a signal; 9 significant digits per sample. `stamp` lines are
/// embedded as `#` comments after the header.
pub fn write_signal(path: &Path, signal: &Signal, stamp: &[String]) -> Result<(), IoError> {
    let mut out = String::with_capacity(signal.len() * 16 + 64);
    writeln!(out, "fs={}", signal.fs.round() as u64).unwrap();
    for line in stamp {
        writeln!(out, "# {line}").unwrap();
    }
    for &v in &signal.samples {
        writeln!(out, "{v:.8e}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_mask(path: &Path) -> Result<BinaryMask, IoError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut lines = data_lines(&text);
    let (line_no, header) = lines.next().ok_or(IoError::Empty { path: name.clone() })?;
    let fs = parse_header(&name, line_no, header)?;
    let mut flags = Vec::new();
    for (line_no, line) in lines {
        let flag = match line {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(IoError::Parse {
                    path: name,
                    line: line_no,
                    msg: format!("mask value must be 0 or 1, got {other:?}"),
                })
            }
        };
        flags.push(flag);
    }
    if flags.is_empty() {
        return Err(IoError::Empty { path: name });
    }
    Ok(BinaryMask::new(flags, fs))
}

pub fn write_mask(path: &Path, mask: &BinaryMask, stamp: &[String]) -> Result<(), IoError> {
    let mut out = String::with_capacity(mask.len() * 2 + 64);
    writeln!(out, "fs={}", mask.fs.round() as u64).unwrap();
    for line in stamp {
        writeln!(out, "# {line}").unwrap();
    }
    for &f in &mask.flags {
        writeln!(out, "{f}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_peaks(path: &Path) -> Result<Vec<f64>, IoError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path)?;
    let mut peaks = Vec::new();
    for (line_no, line) in data_lines(&text) {
        let t: f64 = line.parse().map_err(|_| IoError::Parse {
            path: name.clone(),
            line: line_no,
            msg: format!("bad peak time {line:?}"),
        })?;
        peaks.push(t);
    }
    Ok(peaks)
}

pub fn write_peaks(path: &Path, peaks: &[f64], stamp: &[String]) -> Result<(), IoError> {
    let mut out = String::with_capacity(peaks.len() * 12 + 64);
    for line in stamp {
        writeln!(out, "# {line}").unwrap();
    }
    for &t in peaks {
        writeln!(out, "{t:.6}").unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn signal_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.ppg.csv");
        let sig = Signal::new(vec![0.0, 0.123456789, 1.0], 64.0);
        write_signal(&path, &sig, &["seed=7".into()]).unwrap();
        let back = read_signal(&path).unwrap();
        assert_eq!(back.fs, 64.0);
        assert_eq!(back.len(), 3);
        for (a, b) in back.samples.iter().zip(&sig.samples) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn mask_round_trip_and_validation() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.mask.csv");
        let mask = BinaryMask::new(vec![0, 1, 1, 0], 64.0);
        write_mask(&path, &mask, &[]).unwrap();
        assert_eq!(read_mask(&path).unwrap(), mask);

        std::fs::write(&path, "fs=64\n0\n2\n").unwrap();
        assert!(matches!(read_mask(&path), Err(IoError::Parse { line: 3, .. })));
    }

    #[test]
    fn peaks_round_trip() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("a.peaks.csv");
        write_peaks(&path, &[0.5, 1.5034, 2.5], &["synth seed=7".into()]).unwrap();
        let back = read_peaks(&path).unwrap();
        assert_eq!(back.len(), 3);
        assert!((back[1] - 1.5034).abs() < 1e-6);
    }

    #[test]
    fn missing_header_is_an_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "0.5\n0.6\n").unwrap();
        assert!(matches!(read_signal(&path), Err(IoError::MissingHeader { .. })));
    }
}
