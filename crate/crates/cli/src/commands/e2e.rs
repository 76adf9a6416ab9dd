//! `spear e2e`: seeded corpus generation, training, denoising, and the
//! evaluation report, with pass/fail thresholds on the result.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use spear_core::corpus::{gen_test_corpus, gen_train_corpus};
use spear_core::detect::DetectorKind;
use spear_core::metrics::{eval_harness, pool_variants};
use spear_core::nn::DaeArchitecture;
use spear_core::rng::derive_seed;
use spear_core::signal::BinaryMask;
use spear_core::train::{build_dataset, train_dae, MaskSpec, TrainConfig};

use crate::{EXIT_ACCEPTANCE, EXIT_OK};

#[derive(Args, Debug)]
pub struct E2eArgs {
    /// Master seed; all stage seeds derive from it (printed if omitted)
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 300)]
    pub train_segments: usize,
    #[arg(long, default_value_t = 20)]
    pub test_recordings: usize,
    #[arg(long, default_value_t = 180.0)]
    pub test_duration_s: f64,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    /// Output directory for report.json, train_log.csv, model.ckpt.json
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Pass/fail bounds mirrored by the acceptance suite: the denoised path
/// must beat band-pass-only, which must beat the raw signal, on HR and both
/// HRV metrics, and denoised HR-MAE must stay within 5 bpm.
#[derive(Serialize)]
struct Thresholds {
    spear_hr_mae_max_bpm: f64,
}

const SPEAR_HR_MAE_MAX_BPM: f64 = 5.0;

#[derive(Serialize)]
struct VariantSummary {
    name: String,
    hr_mae_bpm: f64,
    hr_windows_used: usize,
    hr_windows_dropped: usize,
    sdnn_mae_ms: f64,
    rmssd_mae_ms: f64,
    hrv_windows_used: usize,
    hrv_windows_dropped: usize,
}

#[derive(Serialize)]
struct Report {
    command: String,
    config: ConfigEcho,
    train_pairs: usize,
    best_epoch: usize,
    final_train_rmse: f64,
    final_val_rmse: f64,
    variants: Vec<VariantSummary>,
    thresholds: Thresholds,
    pass: bool,
}

#[derive(Serialize)]
struct ConfigEcho {
    master_seed: u64,
    train_segments: usize,
    test_recordings: usize,
    test_duration_s: f64,
    epochs: usize,
    batch_size: usize,
}

pub fn run(args: E2eArgs) -> Result<i32> {
    let seed = match args.seed {
        Some(s) => s,
        None => {
            let s = SystemTime::now().duration_since(UNIX_EPOCH).unwrap().as_nanos() as u64;
            println!("no --seed given; using seed {s}");
            s
        }
    };
    if args.train_segments == 0 {
        bail!("empty corpus: --train-segments must be at least 1");
    }
    if args.test_recordings == 0 {
        bail!("empty corpus: --test-recordings must be at least 1");
    }
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    println!("[1/4] generating {} clean training segments", args.train_segments);
    let segments = gen_train_corpus(seed, args.train_segments).context("stage synth: train corpus")?;
    // Synthetic clean segments carry an all-zero ground-truth mask.
    let oracle_clean = DetectorKind::oracle(BinaryMask::zeros(1920, 64.0));
    let pairs = build_dataset(
        &segments,
        &MaskSpec { seed: derive_seed(seed, "masks"), ..Default::default() },
        &oracle_clean,
    )
    .context("stage dataset")?;
    println!("      {} training pairs", pairs.len());

    println!("[2/4] training {} epochs (batch {})", args.epochs, args.batch);
    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        shuffle_seed: derive_seed(seed, "shuffle"),
        model_seed: derive_seed(seed, "model"),
        ..Default::default()
    };
    let outcome = train_dae(&pairs, DaeArchitecture::standard(), &cfg).context("stage train")?;
    let model = &outcome.best_model;
    let last = outcome.log.last().expect("at least one epoch");
    println!(
        "      final train_rmse {:.6}, val_rmse {:.6} (best epoch {})",
        last.train_rmse, last.val_rmse, outcome.best_epoch
    );

    println!(
        "[3/4] evaluating on {} recordings x {:.0} s",
        args.test_recordings, args.test_duration_s
    );
    let tests = gen_test_corpus(seed, args.test_recordings, args.test_duration_s)
        .context("stage synth: test corpus")?;
    let mut evals = Vec::new();
    for rec in &tests {
        let detector = DetectorKind::oracle(rec.gt.noise_mask.clone());
        evals.push(
            eval_harness(&rec.noisy, &rec.gt, model, &detector, None)
                .with_context(|| format!("stage eval: recording {}", rec.id))?,
        );
    }
    let pooled = pool_variants(&evals);

    let get = |name: &str| pooled.iter().find(|v| v.name == name).expect("variant");
    let raw = get("raw");
    let bp = get("bandpass");
    let spear = get("spear");
    let ordered_hr = spear.hr_mae() < bp.hr_mae() && bp.hr_mae() < raw.hr_mae();
    let ordered_sdnn = spear.sdnn_mae() < bp.sdnn_mae() && bp.sdnn_mae() < raw.sdnn_mae();
    let ordered_rmssd = spear.rmssd_mae() < bp.rmssd_mae() && bp.rmssd_mae() < raw.rmssd_mae();
    let spear_ok = spear.hr_mae() <= SPEAR_HR_MAE_MAX_BPM;
    let pass = ordered_hr && ordered_sdnn && ordered_rmssd && spear_ok;

    println!("[4/4] writing artifacts to {}", args.out_dir.display());
    let variants: Vec<VariantSummary> = pooled
        .iter()
        .map(|v| VariantSummary {
            name: v.name.clone(),
            hr_mae_bpm: v.hr_mae(),
            hr_windows_used: v.hr_abs_errors.len(),
            hr_windows_dropped: v.hr_windows_dropped,
            sdnn_mae_ms: v.sdnn_mae(),
            rmssd_mae_ms: v.rmssd_mae(),
            hrv_windows_used: v.sdnn_abs_errors.len(),
            hrv_windows_dropped: v.hrv_windows_dropped,
        })
        .collect();
    for v in &variants {
        println!(
            "      {:9} hr_mae {:7.3} bpm   sdnn_mae {:8.3} ms   rmssd_mae {:8.3} ms",
            v.name, v.hr_mae_bpm, v.sdnn_mae_ms, v.rmssd_mae_ms
        );
    }

    let report = Report {
        command: "spear e2e".into(),
        config: ConfigEcho {
            master_seed: seed,
            train_segments: args.train_segments,
            test_recordings: args.test_recordings,
            test_duration_s: args.test_duration_s,
            epochs: args.epochs,
            batch_size: args.batch,
        },
        train_pairs: pairs.len(),
        best_epoch: outcome.best_epoch,
        final_train_rmse: last.train_rmse,
        final_val_rmse: last.val_rmse,
        variants,
        thresholds: Thresholds { spear_hr_mae_max_bpm: SPEAR_HR_MAE_MAX_BPM },
        pass,
    };
    std::fs::write(
        args.out_dir.join("report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;

    let mut csv = format!("# spear e2e seed={seed}\nepoch,train_rmse,val_rmse,wall_ms\n");
    for e in &outcome.log {
        writeln!(csv, "{},{},{},{}", e.epoch, e.train_rmse, e.val_rmse, e.wall_ms).unwrap();
    }
    std::fs::write(args.out_dir.join("train_log.csv"), csv)?;
    std::fs::write(
        args.out_dir.join("model.ckpt.json"),
        model.to_checkpoint_json_with_meta(Some(&format!("spear e2e seed={seed}"))),
    )?;

    if pass {
        println!("PASS");
        Ok(EXIT_OK)
    } else {
        println!(
            "FAIL: ordered_hr={ordered_hr} ordered_sdnn={ordered_sdnn} \
             ordered_rmssd={ordered_rmssd} spear_hr_mae<=5: {spear_ok}"
        );
        Ok(EXIT_ACCEPTANCE)
    }
}
