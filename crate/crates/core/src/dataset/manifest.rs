//! Building manifests from the on-disk corpus layout and persisting them.
//!
//! Layout under `<root>/<split>/`:
//!
//! ```text
//! <video_id>/frames/<00000>.jpg     five-digit zero-padded frame index
//! annotations/<video_id>.txt        see `parse_annotation_file`
//! audio/<video_id>.wav              optional, 16-bit PCM
//! ```
//!
//! The persisted form is one tab-separated record per frame with the fields
//! `video_id, frame_index, image_path, label, audio_path, fps` in that order;
//! `audio_path` is empty when a video has no audio.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::annotation::{fit_labels, parse_annotation_file};
use super::{DatasetManifest, ExpressionClass, FrameRate, FrameRecord, Split, VideoRecord};
use crate::{FerError, Result};

const ANNOTATION_DIR: &str = "annotations";
const AUDIO_DIR: &str = "audio";
const FRAME_EXTENSIONS: [&str; 3] = ["jpg", "jpeg", "png"];

pub fn build_manifest(root: &Path, split: Split) -> Result<DatasetManifest> {
    if !root.is_dir() {
        return Err(FerError::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "dataset root is not a directory"),
        ));
    }
    let split_dir = root.join(split.dir_name());
    if !split_dir.is_dir() {
        return DatasetManifest::new(split, Vec::new());
    }

    let mut video_dirs = Vec::new();
    for entry in fs::read_dir(&split_dir).map_err(|e| FerError::io(&split_dir, e))? {
        let entry = entry.map_err(|e| FerError::io(&split_dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if entry.path().is_dir() && name != ANNOTATION_DIR && name != AUDIO_DIR {
            video_dirs.push(name);
        }
    }
    video_dirs.sort();

    let missing: Vec<String> = video_dirs
        .iter()
        .filter(|id| !annotation_path(&split_dir, id).is_file())
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(FerError::MissingAnnotation(missing));
    }

    let videos = video_dirs
        .iter()
        .map(|id| load_video(&split_dir, id))
        .collect::<Result<Vec<_>>>()?;
    DatasetManifest::new(split, videos)
}

fn annotation_path(split_dir: &Path, video_id: &str) -> std::path::PathBuf {
    split_dir.join(ANNOTATION_DIR).join(format!("{video_id}.txt"))
}

fn load_video(split_dir: &Path, video_id: &str) -> Result<VideoRecord> {
    let frames_dir = split_dir.join(video_id).join("frames");
    let mut frame_files = Vec::new();
    if frames_dir.is_dir() {
        for entry in fs::read_dir(&frames_dir).map_err(|e| FerError::io(&frames_dir, e))? {
            let path = entry.map_err(|e| FerError::io(&frames_dir, e))?.path();
            let ext_ok = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| FRAME_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()));
            if !ext_ok {
                continue;
            }
            let index: u32 = path
                .file_stem()
                .and_then(|s| s.to_str())
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| FerError::Integrity(format!("frame file name is not an index: {}", path.display())))?;
            frame_files.push((index, path));
        }
    }
    frame_files.sort();
    if let Some(dup) = frame_files.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(FerError::Integrity(format!(
            "video {video_id}: frame index {} appears twice",
            dup[0].0
        )));
    }

    let ann_path = annotation_path(split_dir, video_id);
    let text = fs::read_to_string(&ann_path).map_err(|e| FerError::io(&ann_path, e))?;
    let timeline = frame_files.last().map_or(0, |(i, _)| *i as usize + 1);
    let mut labels = parse_annotation_file(&text, timeline)?;
    if fit_labels(&mut labels, timeline) {
        log::warn!("{}: labels fitted to {timeline} frames", ann_path.display());
    }

    let frames = frame_files
        .into_iter()
        .map(|(frame_index, path)| FrameRecord {
            video_id: video_id.to_string(),
            frame_index,
            image_path: path.to_string_lossy().into_owned(),
            label: labels[frame_index as usize],
        })
        .collect();

    let wav = split_dir.join(AUDIO_DIR).join(format!("{video_id}.wav"));
    let (audio_path, audio_sample_rate) = if wav.is_file() {
        let reader = hound::WavReader::open(&wav).map_err(|source| FerError::Wav {
            path: wav.clone(),
            source,
        })?;
        (Some(wav.to_string_lossy().into_owned()), Some(reader.spec().sample_rate))
    } else {
        (None, None)
    };

    Ok(VideoRecord {
        video_id: video_id.to_string(),
        fps: FrameRate::DEFAULT,
        frames,
        audio_path,
        audio_sample_rate,
    })
}

pub fn write_manifest(manifest: &DatasetManifest, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| FerError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for video in &manifest.videos {
        let audio = video.audio_path.as_deref().unwrap_or("");
        for frame in &video.frames {
            for field in [&frame.video_id, &frame.image_path, audio] {
                if field.contains(['\t', '\n', '\r']) {
                    return Err(FerError::invalid(format!("field `{field}` contains a tab or newline")));
                }
            }
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}\t{}",
                frame.video_id,
                frame.frame_index,
                frame.image_path,
                frame.label.code(),
                audio,
                video.fps
            )
            .map_err(|e| FerError::io(path, e))?;
        }
    }
    out.flush().map_err(|e| FerError::io(path, e))
}

/// Read a persisted manifest. Records of one video must be contiguous.
pub fn read_manifest(path: &Path, split: Split) -> Result<DatasetManifest> {
    let file = fs::File::open(path).map_err(|e| FerError::io(path, e))?;
    let mut videos: Vec<VideoRecord> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| FerError::io(path, e))?;
        if line.is_empty() {
            continue;
        }
        let parse_err = |message: String| FerError::Parse { line: line_no, message };
        let fields: Vec<&str> = line.split('\t').collect();
        let [video_id, frame_index, image_path, label, audio, fps] = fields[..] else {
            return Err(parse_err(format!("expected 6 tab-separated fields, found {}", fields.len())));
        };
        let frame_index: u32 = frame_index
            .parse()
            .map_err(|_| parse_err(format!("bad frame index `{frame_index}`")))?;
        let label = label
            .parse::<i64>()
            .ok()
            .and_then(ExpressionClass::from_code)
            .ok_or_else(|| parse_err(format!("bad label `{label}`")))?;
        let fps: FrameRate = fps.parse().map_err(|e: FerError| parse_err(e.to_string()))?;
        let audio_path = (!audio.is_empty()).then(|| audio.to_string());

        let frame = FrameRecord {
            video_id: video_id.to_string(),
            frame_index,
            image_path: image_path.to_string(),
            label,
        };
        match videos.last_mut() {
            Some(v) if v.video_id == video_id => {
                if v.fps != fps || v.audio_path != audio_path {
                    return Err(parse_err(format!("video {video_id} changes fps or audio path mid-stream")));
                }
                v.frames.push(frame);
            }
            _ => videos.push(VideoRecord {
                video_id: video_id.to_string(),
                fps,
                frames: vec![frame],
                audio_path,
                audio_sample_rate: None,
            }),
        }
    }
    DatasetManifest::new(split, videos)
}
