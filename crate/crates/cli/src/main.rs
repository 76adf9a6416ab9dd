//! `spear` command line: corpus generation, autoencoder training, denoising,
//! and HR/HRV evaluation with reproducible seeding.

mod commands;
mod detector_arg;

use clap::{Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Parser)]
#[command(
    name = "spear",
    version,
    about = "Self-supervised PPG denoising: erase detected artifacts, reconstruct them with a trained autoencoder, and estimate HR/HRV",
    after_long_help = FORMATS_HELP
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const FORMATS_HELP: &str = "\
FILE FORMATS:
  ppgcsv (*.ppg.csv)    line 1 `fs=<integer Hz>`, then one decimal sample per
                        line; `#` lines are comments (used to embed the
                        producing command and seed) and are skipped on read.
  mask (*.mask.csv)     same header, then one `0`/`1` per line, aligned to the
                        paired signal.
  peaks (*.peaks.csv)   one beat-peak time in seconds per line.
  checkpoint (*.json)   versioned JSON with the architecture and base64 of
                        raw little-endian f64 parameter and running-stat
                        tensors; round-trips bit-exactly.
  reports (*.json)      machine-readable summaries; every report embeds the
                        config and seed that produced it.

EXIT CODES:
  0 success, 1 usage error, 2 data error, 3 acceptance failure.";

#[derive(Subcommand)]
enum Command {
    /// Generate a paired clean/noisy synthetic recording with ground truth
    Synth(commands::synth::SynthArgs),
    /// Train the denoising autoencoder on clean 30 s segments
    Train(commands::train::TrainArgs),
    /// Denoise a recording: detect artifacts, erase, reconstruct, band-pass
    Denoise(commands::denoise::DenoiseArgs),
    /// Windowed heart-rate comparison between a signal and ground-truth peaks
    EvalHr(commands::eval::EvalHrArgs),
    /// Windowed HRV (SDNN/RMSSD) comparison against ground-truth peaks
    EvalHrv(commands::eval::EvalHrvArgs),
    /// Full pipeline: seeded corpus, training, denoising, evaluation report
    E2e(commands::e2e::E2eArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Version/help requests are successes; anything else is usage.
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    let outcome = match cli.command {
        Command::Synth(args) => commands::synth::run(args),
        Command::Train(args) => commands::train::run(args),
        Command::Denoise(args) => commands::denoise::run(args),
        Command::EvalHr(args) => commands::eval::run_hr(args),
        Command::EvalHrv(args) => commands::eval::run_hrv(args),
        Command::E2e(args) => commands::e2e::run(args),
    };

    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(EXIT_DATA);
        }
    }
}
