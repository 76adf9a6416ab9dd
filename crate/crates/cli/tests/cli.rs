//! End-to-end checks of the command-line surface: file formats, exit codes,
//! and the synth -> train -> denoise -> eval flow on a tiny corpus.

use std::path::Path;
use std::process::Command;

fn spear() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spear"))
}

#[test]
fn usage_errors_exit_1() {
    let out = spear().arg("no-such-command").output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = spear().args(["synth", "--bogus-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = spear()
        .args(["denoise", "--in", "/nonexistent.ppg.csv", "--model", "/nonexistent.json", "--out"])
        .arg(dir.path().join("out.ppg.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));

    let out = spear()
        .args([
            "e2e",
            "--seed",
            "1",
            "--train-segments",
            "0",
            "--out-dir",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("empty corpus"), "stderr: {stderr}");
}

#[test]
fn help_documents_formats_and_exits_0() {
    let out = spear().args(["--help"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));

    let long = spear().arg("help").output().unwrap();
    let text = String::from_utf8_lossy(&long.stdout);
    assert!(text.contains("spear"), "{text}");
}

fn write_corpus(dir: &Path, count: usize) {
    for i in 0..count {
        let status = spear()
            .args([
                "synth",
                "--name",
                &format!("clean-{i}"),
                "--seed",
                &(100 + i as u64).to_string(),
                "--duration-s",
                "30",
                "--hr-bpm",
                &format!("{}", 60 + 7 * i),
                "--burst-count",
                "0",
                "--bw-amp",
                "0",
                "--out-dir",
            ])
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
    }
}

/// The full tool flow on a miniature corpus: synthesize clean segments,
/// train briefly, synthesize a noisy test recording, denoise it with the
/// oracle mask, and score HR against the ground-truth peaks.
#[test]
fn synth_train_denoise_eval_flow() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    write_corpus(&corpus, 4);
    // The noisy copies are not part of the training corpus.
    for entry in std::fs::read_dir(&corpus).unwrap() {
        let p = entry.unwrap().path();
        let name = p.file_name().unwrap().to_str().unwrap().to_string();
        if name.ends_with(".noisy.ppg.csv") {
            std::fs::remove_file(p).unwrap();
        }
    }

    let ckpt = dir.path().join("model.json");
    let out = spear()
        .args(["train", "--epochs", "2", "--seed", "9", "--corpus"])
        .arg(&corpus)
        .arg("--save")
        .arg(&ckpt)
        .arg("--log")
        .arg(dir.path().join("log.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "train failed: {}", String::from_utf8_lossy(&out.stderr));
    let log = std::fs::read_to_string(dir.path().join("log.csv")).unwrap();
    assert!(log.starts_with("# spear train seed=9"));
    assert!(log.lines().nth(1).unwrap().starts_with("epoch,train_rmse,val_rmse,wall_ms"));
    assert_eq!(log.lines().count(), 4);

    let status = spear()
        .args([
            "synth", "--name", "test", "--seed", "77", "--duration-s", "60", "--hr-bpm", "72",
            "--burst-count", "3", "--out-dir",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());

    let denoised = dir.path().join("denoised.ppg.csv");
    let report = dir.path().join("report.json");
    let out = spear()
        .args(["denoise", "--detector", "oracle", "--in"])
        .arg(dir.path().join("test.noisy.ppg.csv"))
        .arg("--model")
        .arg(&ckpt)
        .arg("--out")
        .arg(&denoised)
        .arg("--report")
        .arg(&report)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "denoise failed: {}", String::from_utf8_lossy(&out.stderr));
    let report_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(report_json["segments_total"], 2);
    assert!(report_json["fractions"].as_array().unwrap().len() == 2);

    let summary = dir.path().join("hr.json");
    let out = spear()
        .args(["eval-hr", "--in"])
        .arg(&denoised)
        .arg("--truth-peaks")
        .arg(dir.path().join("test.peaks.csv"))
        .arg("--out-csv")
        .arg(dir.path().join("hr.csv"))
        .arg("--summary")
        .arg(&summary)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "eval-hr failed: {}", String::from_utf8_lossy(&out.stderr));
    let summary_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(summary_json["hr_mae"].is_number());
    assert!(summary_json["windows_used"].as_u64().unwrap() > 0);

    let out = spear()
        .args(["eval-hrv", "--in"])
        .arg(&denoised)
        .arg("--truth-peaks")
        .arg(dir.path().join("test.peaks.csv"))
        .arg("--summary")
        .arg(dir.path().join("hrv.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "eval-hrv failed: {}", String::from_utf8_lossy(&out.stderr));
}

/// Mask files round-trip through the external detector path.
#[test]
fn external_detector_reads_mask_files() {
    let dir = tempfile::tempdir().unwrap();
    let status = spear()
        .args([
            "synth", "--name", "x", "--seed", "5", "--duration-s", "30", "--burst-count", "1",
            "--out-dir",
        ])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(status.success());

    // An untrained checkpoint is enough to exercise the path.
    let ckpt = dir.path().join("model.json");
    let corpus = dir.path().join("corpus");
    std::fs::create_dir_all(&corpus).unwrap();
    write_corpus(&corpus, 1);
    for entry in std::fs::read_dir(&corpus).unwrap() {
        let p = entry.unwrap().path();
        if p.to_str().unwrap().ends_with(".noisy.ppg.csv") {
            std::fs::remove_file(p).unwrap();
        }
    }
    let out = spear()
        .args(["train", "--epochs", "1", "--seed", "2", "--corpus"])
        .arg(&corpus)
        .arg("--save")
        .arg(&ckpt)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let mask_arg = format!("external:{}", dir.path().join("x.mask.csv").display());
    let out = spear()
        .args(["denoise", "--detector", &mask_arg, "--in"])
        .arg(dir.path().join("x.noisy.ppg.csv"))
        .arg("--model")
        .arg(&ckpt)
        .arg("--out")
        .arg(dir.path().join("x.denoised.ppg.csv"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}
