//! `spear train`: select clean 30 s segments from a corpus directory and
//! train the denoising autoencoder.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use spear_core::detect::is_clean;
use spear_core::io::read_signal;
use spear_core::nn::DaeArchitecture;
use spear_core::rng::derive_seed;
use spear_core::signal::{segment_with_id, Segment};
use spear_core::train::{build_dataset, train_dae, MaskSpec, TrainConfig};

use crate::detector_arg::DetectorArg;
use crate::EXIT_OK;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory of clean recordings (*.ppg.csv), each split into 30 s
    /// segments
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch: usize,
    #[arg(long)]
    pub seed: u64,
    /// Checkpoint output path
    #[arg(long)]
    pub save: PathBuf,
    /// Training log CSV (epoch, train_rmse, val_rmse, wall_ms)
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Detector used to select clean segments
    #[arg(long, default_value = "heuristic")]
    pub detector: DetectorArg,
}

pub fn run(args: TrainArgs) -> Result<i32> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(&args.corpus)
        .with_context(|| format!("reading corpus dir {}", args.corpus.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(".ppg.csv")))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("empty corpus: no *.ppg.csv files in {}", args.corpus.display());
    }

    // Clean-segment selection and dataset construction happen per file so
    // the contract check inside build_dataset runs against the same
    // detector instance that selected the segments.
    let mask_spec = MaskSpec { seed: derive_seed(args.seed, "masks"), ..Default::default() };
    let mut pairs = Vec::new();
    let mut kept = 0usize;
    let mut rejected = 0usize;
    let mut global_index = 0usize;
    for file in &files {
        let recording = read_signal(file)?;
        let detector = args.detector.build(file)?;
        let id = file.file_stem().and_then(|n| n.to_str()).unwrap_or("rec").to_string();
        let mut clean_segs = Vec::new();
        for seg in segment_with_id(&recording, 30.0, &id)? {
            if is_clean(&seg, &detector)? {
                clean_segs.push(Segment { index: global_index, ..seg });
                global_index += 1;
            } else {
                rejected += 1;
            }
        }
        kept += clean_segs.len();
        if !clean_segs.is_empty() {
            pairs.extend(build_dataset(&clean_segs, &mask_spec, &detector)?);
        }
    }
    if kept == 0 {
        bail!("empty corpus: no clean 30 s segments found");
    }
    println!("selected {kept} clean segments ({rejected} rejected)");
    println!("dataset: {} training pairs", pairs.len());

    let cfg = TrainConfig {
        epochs: args.epochs,
        batch_size: args.batch,
        shuffle_seed: derive_seed(args.seed, "shuffle"),
        model_seed: derive_seed(args.seed, "model"),
        ..Default::default()
    };
    let outcome = train_dae(&pairs, DaeArchitecture::standard(), &cfg)?;
    for entry in &outcome.log {
        println!(
            "epoch {:3}  train_rmse {:.6}  val_rmse {:.6}  {} ms",
            entry.epoch, entry.train_rmse, entry.val_rmse, entry.wall_ms
        );
    }

    std::fs::write(
        &args.save,
        outcome
            .best_model
            .to_checkpoint_json_with_meta(Some(&format!("spear train seed={}", args.seed))),
    )
        .with_context(|| format!("writing checkpoint {}", args.save.display()))?;
    println!(
        "saved best checkpoint (epoch {}) to {}",
        outcome.best_epoch,
        args.save.display()
    );

    if let Some(log_path) = &args.log {
        let mut csv = format!("# spear train seed={}\nepoch,train_rmse,val_rmse,wall_ms\n", args.seed);
        for e in &outcome.log {
            writeln!(csv, "{},{},{},{}", e.epoch, e.train_rmse, e.val_rmse, e.wall_ms).unwrap();
        }
        std::fs::write(log_path, csv)
            .with_context(|| format!("writing log {}", log_path.display()))?;
    }
    Ok(EXIT_OK)
}
