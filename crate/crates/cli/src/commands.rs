use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fer_core::audio::{extract_window, mel_spectrogram, read_wav, resample_linear, spectrogram_to_image, write_spectrogram};
use fer_core::augment::{half_mix, resize_bilinear, HalfMixSpec, ImageTensor, Provenance, SoftLabel};
use fer_core::config::RunConfig;
use fer_core::dataset::{
    build_manifest, class_distribution, read_manifest, write_manifest, DatasetManifest, ExpressionClass, Split,
    StreamKind,
};
use fer_core::fusion::{align_to_frames, evaluate, fuse, read_scores, write_scores, ScoreRow, StreamScores};
use fer_core::model::{read_checkpoint, write_checkpoint};
use fer_core::pipeline::{plan_stream, predict_stream, train_stream, InputSource, AUDIO_WINDOW_SECONDS};
use fer_core::synth::{reference_manifest, write_corpus, SynthConfig};
use fer_core::FerError;

use crate::{Cli, Command, CommonArgs, DataArgs, ScoreArgs};

struct RunContext {
    config: RunConfig,
    out: PathBuf,
}

fn load_config(common: &CommonArgs, epochs: Option<usize>) -> Result<RunContext> {
    let mut config = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for o in &common.overrides {
        config.apply_override(o)?;
    }
    if let Some(seed) = common.seed {
        config.set_seed(seed);
    }
    if let Some(epochs) = epochs {
        config.train.epochs = epochs;
    }
    if let Some(out) = &common.out {
        config.out = Some(out.clone());
    }
    config.finalize()?;
    let out = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    Ok(RunContext { config, out })
}

fn load_manifest(data: &DataArgs, config: &RunConfig, default_split: Split) -> Result<DatasetManifest> {
    let split = data.split.unwrap_or(default_split);
    if let Some(path) = &data.manifest {
        return Ok(read_manifest(path, split)?);
    }
    let root = data
        .root
        .as_ref()
        .or(config.dataset.root.as_ref())
        .context("no dataset given: pass --root, --manifest or set dataset.root")?;
    Ok(build_manifest(root, split)?)
}

fn parse_class(name: &str) -> Result<ExpressionClass> {
    ExpressionClass::ALL
        .into_iter()
        .find(|c| c.name() == name.to_ascii_lowercase())
        .with_context(|| format!("unknown class `{name}`"))
}

pub fn run(cli: Cli) -> Result<()> {
    let epochs = match &cli.command {
        Command::Train { epochs, .. } => *epochs,
        _ => None,
    };
    let ctx = load_config(&cli.common, epochs)?;
    match cli.command {
        Command::Stats { data } => stats(&ctx, &data),
        Command::Manifest { data } => manifest(&ctx, &data),
        Command::Synth {
            reference_counts,
            train_videos,
            validation_videos,
            frames_per_video,
            image_size,
        } => {
            if reference_counts {
                let path = ctx.out.join("reference.manifest.tsv");
                write_manifest(&reference_manifest(), &path)?;
                println!("{}", path.display());
                return Ok(());
            }
            let synth = SynthConfig {
                train_videos,
                validation_videos,
                frames_per_video,
                image_size,
                seed: ctx.config.seed,
                ..SynthConfig::default()
            };
            write_corpus(&ctx.out, &synth)?;
            println!("{}", ctx.out.display());
            Ok(())
        }
        Command::PreviewAugment {
            image_a,
            image_b,
            class_a,
            class_b,
        } => preview_augment(&ctx, &image_a, &image_b, parse_class(&class_a)?, parse_class(&class_b)?),
        Command::Melspec { wav, data, png } => melspec(&ctx, wav.as_deref(), &data, png),
        Command::Train { stream, data, .. } => train(&ctx, stream, &data),
        Command::Predict {
            stream,
            checkpoint,
            data,
        } => predict(&ctx, stream, checkpoint, &data),
        Command::Fuse { scores, data } => fuse_scores(&ctx, &scores, &data),
        Command::Eval { scores, data } => eval(&ctx, &scores, &data),
    }
}

fn stats(ctx: &RunContext, data: &DataArgs) -> Result<()> {
    let manifest = load_manifest(data, &ctx.config, Split::Train)?;
    println!("{}", class_distribution(&manifest));
    Ok(())
}

fn manifest(ctx: &RunContext, data: &DataArgs) -> Result<()> {
    let manifest = load_manifest(data, &ctx.config, Split::Train)?;
    let path = ctx.out.join(format!("{}.manifest.tsv", manifest.split.dir_name()));
    write_manifest(&manifest, &path)?;
    println!("{} videos, {} frames -> {}", manifest.videos.len(), manifest.frame_count(), path.display());
    Ok(())
}

fn preview_augment(ctx: &RunContext, a: &Path, b: &Path, class_a: ExpressionClass, class_b: ExpressionClass) -> Result<()> {
    let img_a = ImageTensor::load(a)?;
    let mut img_b = ImageTensor::load(b)?;
    if img_b.dims() != img_a.dims() {
        img_b = resize_bilinear(&img_b, img_a.height(), img_a.width())?;
    }
    let (label_a, label_b) = (SoftLabel::one_hot(class_a)?, SoftLabel::one_hot(class_b)?);
    let mut audit = format!("# seed={}\n# input\treference\torientation\tkept_side\talpha\tlabel\toutput\n", ctx.config.seed);
    for spec in HalfMixSpec::all() {
        let out = half_mix((&img_a, &label_a), (&img_b, &label_b), &spec)?;
        let name = format!("halfmix_{}_{}_{:.1}.png", spec.orientation.name(), spec.kept_side.name(), spec.alpha());
        out.image.save_png(&ctx.out.join(&name))?;
        let provenance = Provenance {
            input_id: a.display().to_string(),
            reference_id: b.display().to_string(),
            spec,
        };
        let label: Vec<String> = out.label.probabilities().iter().map(|p| format!("{p}")).collect();
        audit.push_str(&format!("{}\t{}\t{name}\n", provenance.to_line(), label.join(",")));
    }
    let log = ctx.out.join("audit.log");
    fs::write(&log, audit).with_context(|| format!("writing {}", log.display()))?;
    println!("8 images and {}", log.display());
    Ok(())
}

fn melspec(ctx: &RunContext, wav: Option<&Path>, data: &DataArgs, png: bool) -> Result<()> {
    let mel = &ctx.config.mel;
    let size = ctx.config.dataset.input_size;
    let mut written = 0usize;
    let mut emit = |stem: &str, k: usize, grid: &fer_core::audio::SpectrogramGrid| -> Result<()> {
        write_spectrogram(&ctx.out.join(format!("{stem}_{k:04}.mels")), grid)?;
        if png {
            spectrogram_to_image(grid, size, size)?.save_png(&ctx.out.join(format!("{stem}_{k:04}.png")))?;
        }
        written += 1;
        Ok(())
    };
    if let Some(wav) = wav {
        let clip = resample_linear(&read_wav(wav)?, mel.sample_rate)?;
        let stem = wav.file_stem().and_then(|s| s.to_str()).unwrap_or("audio").to_string();
        let windows = (clip.duration_sec() / AUDIO_WINDOW_SECONDS).floor() as usize;
        for k in 0..windows {
            let window = extract_window(&clip, k as f64 * AUDIO_WINDOW_SECONDS, AUDIO_WINDOW_SECONDS)?;
            emit(&stem, k, &mel_spectrogram(&window.clip, mel)?)?;
        }
    } else {
        let manifest = load_manifest(data, &ctx.config, Split::Train)?;
        let source = InputSource::new(&manifest, (size, size), mel.clone())?;
        let plan = plan_stream(&manifest, StreamKind::Audio, ctx.config.dataset.temporal_selection)?;
        let mut previous: Option<(&str, usize)> = None;
        for window in &plan.windows {
            let k = match previous {
                Some((id, k)) if id == window.video_id => k + 1,
                _ => 0,
            };
            emit(&window.video_id, k, &source.spectrogram(window)?)?;
            previous = Some((&window.video_id, k));
        }
    }
    println!("{written} spectrograms -> {}", ctx.out.display());
    Ok(())
}

fn train(ctx: &RunContext, stream: StreamKind, data: &DataArgs) -> Result<()> {
    let config = &ctx.config;
    let manifest = load_manifest(data, config, Split::Train)?;
    println!("{stream}: {}", config.echo());
    let history = train_stream(&manifest, config, stream)?;
    let ckpt = ctx.out.join(format!("{stream}.head"));
    write_checkpoint(&ckpt, &history.head)?;
    let log_path = ctx.out.join(format!("{stream}.train.log"));
    let log = format!("# stream={stream} {}\n{}", config.echo(), history.log_lines());
    fs::write(&log_path, log).with_context(|| format!("writing {}", log_path.display()))?;
    if let Some(last) = history.epochs.last() {
        println!("epochs={} final_loss={:.6} -> {}", history.epochs.len(), last.mean_loss, ckpt.display());
    }
    Ok(())
}

fn predict(ctx: &RunContext, stream: StreamKind, checkpoint: Option<PathBuf>, data: &DataArgs) -> Result<()> {
    let config = &ctx.config;
    let ckpt = checkpoint.unwrap_or_else(|| ctx.out.join(format!("{stream}.head")));
    let head = read_checkpoint(&ckpt)?;
    if head.dim() != config.backbone(stream).output_dim() {
        bail!("checkpoint {} has feature size {}, expected {}", ckpt.display(), head.dim(), config.backbone(stream).output_dim());
    }
    let manifest = load_manifest(data, config, Split::Validation)?;
    let scores = predict_stream(&manifest, config, stream, &head)?;
    let path = ctx.out.join(format!("{stream}.scores.csv"));
    write_scores(&path, &scores)?;
    println!("{} windows -> {}", scores.rows.len(), path.display());
    Ok(())
}

fn read_score_args(args: &ScoreArgs) -> Result<Vec<StreamScores>> {
    let mut out = Vec::new();
    for (stream, path) in [
        (StreamKind::Visual, &args.visual),
        (StreamKind::Temporal, &args.temporal),
        (StreamKind::Audio, &args.audio),
    ] {
        if let Some(path) = path {
            out.push(read_scores(path, stream).with_context(|| format!("reading {}", path.display()))?);
        }
    }
    if out.is_empty() {
        bail!("pass at least one of --visual, --temporal, --audio");
    }
    Ok(out)
}

fn fuse_scores(ctx: &RunContext, args: &ScoreArgs, data: &DataArgs) -> Result<()> {
    let streams = read_score_args(args)?;
    let manifest = load_manifest(data, &ctx.config, Split::Validation)?;
    for s in &streams {
        if let Some(row) = s.rows.iter().find(|r| manifest.video(&r.video_id).is_none()) {
            bail!(FerError::Integrity(format!("{} scores reference unknown video {}", s.stream, row.video_id)));
        }
    }
    let mut rows = Vec::new();
    let mut unpredicted = 0usize;
    for video in &manifest.videos {
        let aligned = streams
            .iter()
            .map(|s| Ok((s.stream, align_to_frames(s, video)?)))
            .collect::<fer_core::Result<Vec<_>>>()?;
        let refs: Vec<_> = aligned.iter().map(|(k, s)| (*k, s)).collect();
        for (f, row) in fuse(&refs, &ctx.config.fusion)?.into_iter().enumerate() {
            match row {
                Some(scores) => rows.push(ScoreRow {
                    video_id: video.video_id.clone(),
                    start_frame: f as u32,
                    end_frame: f as u32 + 1,
                    scores,
                }),
                None => unpredicted += 1,
            }
        }
    }
    let path = ctx.out.join("fused.scores.csv");
    let fused = StreamScores {
        stream: StreamKind::Visual,
        rows,
    };
    fs::write(&path, fused.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    println!("{} frames fused, {unpredicted} without scores -> {}", fused.rows.len(), path.display());
    Ok(())
}

fn eval(ctx: &RunContext, args: &ScoreArgs, data: &DataArgs) -> Result<()> {
    let streams = read_score_args(args)?;
    let manifest = load_manifest(data, &ctx.config, Split::Validation)?;
    let report = evaluate(&manifest, &streams, &ctx.config.fusion)?;
    let text = report.render_text();
    fs::write(ctx.out.join("report.txt"), &text).context("writing report.txt")?;
    fs::write(ctx.out.join("report.kv"), report.render_key_values()).context("writing report.kv")?;
    print!("{text}");
    Ok(())
}
