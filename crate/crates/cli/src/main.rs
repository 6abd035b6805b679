//! `fer`: command-line entry point for the three-stream expression pipeline.
//!
//! Exit status is 0 on success, 2 for usage, configuration and data errors
//! and 3 when an internal invariant is violated.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fer_core::dataset::{Split, StreamKind};
use fer_core::FerError;

#[derive(Debug, Parser)]
#[command(name = "fer", version, about = "Three-stream facial expression recognition pipeline")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Sectioned key=value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root seed for every random draw.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Override one configuration value, `section.key=value`. Repeatable.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Corpus root holding `<split>/<video>/frames`, annotations and audio.
    #[arg(long)]
    root: Option<PathBuf>,

    /// Persisted manifest to read instead of scanning a corpus root.
    #[arg(long, conflicts_with = "root")]
    manifest: Option<PathBuf>,

    /// `train` or `validation`; defaults depend on the command.
    #[arg(long)]
    split: Option<Split>,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[arg(long)]
    visual: Option<PathBuf>,
    #[arg(long)]
    temporal: Option<PathBuf>,
    #[arg(long)]
    audio: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print per-class frame counts and ratios.
    Stats {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Scan a corpus root and write its manifest.
    Manifest {
        #[command(flatten)]
        data: DataArgs,
    },
    /// Write a synthetic corpus, or the reference class-count manifest.
    Synth {
        /// Write only `reference.manifest.tsv` with the reference train-split counts.
        #[arg(long)]
        reference_counts: bool,
        #[arg(long, default_value_t = 3)]
        train_videos: usize,
        #[arg(long, default_value_t = 2)]
        validation_videos: usize,
        #[arg(long, default_value_t = 480)]
        frames_per_video: u32,
        #[arg(long, default_value_t = 32)]
        image_size: usize,
    },
    /// Write the eight half-mix variants of an image pair plus an audit log.
    PreviewAugment {
        #[arg(long)]
        image_a: PathBuf,
        #[arg(long)]
        image_b: PathBuf,
        #[arg(long, default_value = "neutral")]
        class_a: String,
        #[arg(long, default_value = "anger")]
        class_b: String,
    },
    /// Write log-mel spectrograms of two-second audio windows.
    Melspec {
        /// A single recording; otherwise every audio track of the dataset.
        #[arg(long)]
        wav: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
        /// Also write each spectrogram as a PNG at the configured input size.
        #[arg(long)]
        png: bool,
    },
    /// Train the head of one stream.
    Train {
        #[arg(long)]
        stream: StreamKind,
        #[command(flatten)]
        data: DataArgs,
        /// Override `train.epochs`.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Score every window of one stream with a trained head.
    Predict {
        #[arg(long)]
        stream: StreamKind,
        /// Defaults to `<out>/<stream>.head`.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Fuse per-stream scores into per-frame scores.
    Fuse {
        #[command(flatten)]
        scores: ScoreArgs,
        #[command(flatten)]
        data: DataArgs,
    },
    /// Evaluate every fusion configuration of the given score files.
    Eval {
        #[command(flatten)]
        scores: ScoreArgs,
        #[command(flatten)]
        data: DataArgs,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let internal = err
        .chain()
        .any(|cause| matches!(cause.downcast_ref::<FerError>(), Some(FerError::Invariant(_))));
    if internal {
        3
    } else {
        2
    }
}

/// The error chain joined with `: `, skipping causes already quoted by the
/// message before them.
fn render(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if !out.contains(&text) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&text);
        }
    }
    out
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", render(&err));
            ExitCode::from(exit_code(&err))
        }
    }
}
