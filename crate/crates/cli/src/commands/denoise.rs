//! `spear denoise`: artifact detection, erase/reconstruct/merge, band-pass.

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use spear_core::io::{read_signal, write_signal};
use spear_core::nn::DaeModel;
use spear_core::pipeline::{denoise_recording, DenoiseReport};

use crate::detector_arg::DetectorArg;
use crate::EXIT_OK;

#[derive(Args, Debug)]
pub struct DenoiseArgs {
    /// Input recording (ppgcsv)
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Model checkpoint
    #[arg(long)]
    pub model: PathBuf,
    /// oracle[:<mask>], heuristic, or external:<mask>
    #[arg(long, default_value = "heuristic")]
    pub detector: DetectorArg,
    /// Denoised output (ppgcsv)
    #[arg(long)]
    pub out: PathBuf,
    /// Denoising report (JSON)
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReportFile<'a> {
    command: String,
    input: String,
    model: String,
    #[serde(flatten)]
    report: &'a DenoiseReport,
}

pub fn run(args: DenoiseArgs) -> Result<i32> {
    let recording = read_signal(&args.input)?;
    let ckpt = std::fs::read_to_string(&args.model)
        .with_context(|| format!("reading checkpoint {}", args.model.display()))?;
    let model = DaeModel::from_checkpoint_json(&ckpt)?;
    let detector = args.detector.build(&args.input)?;

    let (denoised, report) = denoise_recording(&recording, &model, &detector)?;

    let stamp = vec![
        format!("spear denoise --in {}", args.input.display()),
        format!(
            "segments_total={} segments_discarded={}",
            report.segments_total, report.segments_discarded
        ),
    ];
    write_signal(&args.out, &denoised.signal, &stamp)?;
    println!(
        "denoised {} -> {} ({} segments, {} discarded)",
        args.input.display(),
        args.out.display(),
        report.segments_total,
        report.segments_discarded
    );

    if let Some(report_path) = &args.report {
        let file = ReportFile {
            command: "spear denoise".into(),
            input: args.input.display().to_string(),
            model: args.model.display().to_string(),
            report: &report,
        };
        std::fs::write(report_path, serde_json::to_string_pretty(&file)?)
            .with_context(|| format!("writing report {}", report_path.display()))?;
    }
    Ok(EXIT_OK)
}
