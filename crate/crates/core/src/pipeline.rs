//! Glue between a manifest and the per-stream models: window plans with
//! labels, input loading with caches, and training views.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, RwLock};

use crate::audio::{extract_window, mel_spectrogram, read_wav, resample_linear, spectrogram_to_image, AudioClip, MelConfig, SpectrogramGrid};
use crate::augment::{resize_bilinear, ImageTensor};
use crate::dataset::{
    sample_audio_windows, sample_temporal_shots_with, sample_visual_frames, subsample_indices, DatasetManifest,
    ExpressionClass, StreamKind, TemporalSelection, VideoRecord, Window, NUM_CLASSES,
};
use crate::augment::StreamAugmenter;
use crate::config::RunConfig;
use crate::fusion::StreamScores;
use crate::model::{predict, train, LinearHead, StreamInput, TrainHistory, TrainingSet};
use crate::{FerError, Result};

/// Audio windows span two seconds of the recording.
pub const AUDIO_WINDOW_SECONDS: f64 = 2.0;

/// Windows of one stream over a whole manifest, each with its label.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamWindows {
    pub stream: StreamKind,
    pub windows: Vec<Window>,
    /// Visual: the frame label. Temporal and audio: the most frequent label
    /// among labeled frames of the window, ties to the lower class index;
    /// `Unlabeled` when no frame is labeled.
    pub labels: Vec<ExpressionClass>,
}

/// Plan every window of `stream`. Videos without audio are skipped (with a
/// warning) for the audio stream.
pub fn plan_stream(manifest: &DatasetManifest, stream: StreamKind, selection: TemporalSelection) -> Result<StreamWindows> {
    let mut windows = Vec::new();
    let mut labels = Vec::new();
    for video in &manifest.videos {
        let plan = match stream {
            StreamKind::Visual => sample_visual_frames(video),
            StreamKind::Temporal => sample_temporal_shots_with(video, selection)?,
            StreamKind::Audio => match sample_audio_windows(video) {
                Ok(plan) => plan,
                Err(FerError::StreamUnavailable { video_id, reason }) => {
                    log::warn!("skipping audio of {video_id}: {reason}");
                    continue;
                }
                Err(e) => return Err(e),
            },
        };
        for window in plan.windows {
            labels.push(window_label(video, &window));
            windows.push(window);
        }
    }
    Ok(StreamWindows { stream, windows, labels })
}

fn window_label(video: &VideoRecord, window: &Window) -> ExpressionClass {
    let mut counts = [0usize; NUM_CLASSES];
    let lo = video.frames.partition_point(|f| f.frame_index < window.start_frame);
    for frame in video.frames[lo..].iter().take_while(|f| f.frame_index < window.end_frame) {
        if let Some(k) = frame.label.index() {
            counts[k] += 1;
        }
    }
    let mut best = 0;
    for k in 1..NUM_CLASSES {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    if counts[best] == 0 {
        ExpressionClass::Unlabeled
    } else {
        ExpressionClass::ALL[best]
    }
}

/// Loads stream inputs for windows of one manifest. Decoded frames, audio
/// tracks and spectrogram images are cached; frames are stored as 8-bit RGB at the input size,
/// so cached and uncached loads are bit-identical.
pub struct InputSource<'a> {
    manifest: &'a DatasetManifest,
    input_size: (usize, usize),
    mel: MelConfig,
    frames: RwLock<HashMap<String, Arc<ImageTensor>>>,
    audio: RwLock<HashMap<String, Arc<AudioClip>>>,
    spectrogram_images: RwLock<HashMap<(String, u32), Arc<ImageTensor>>>,
    cache_frames: bool,
}

impl<'a> InputSource<'a> {
    pub fn new(manifest: &'a DatasetManifest, input_size: (usize, usize), mel: MelConfig) -> Result<Self> {
        mel.validate(mel.sample_rate)?;
        if input_size.0 == 0 || input_size.1 == 0 {
            return Err(FerError::Config(format!("input size {input_size:?} must be positive")));
        }
        Ok(InputSource {
            manifest,
            input_size,
            mel,
            frames: RwLock::new(HashMap::new()),
            audio: RwLock::new(HashMap::new()),
            spectrogram_images: RwLock::new(HashMap::new()),
            cache_frames: true,
        })
    }

    /// Turn frame caching off, e.g. for corpora too large to keep in memory.
    pub fn without_frame_cache(mut self) -> Self {
        self.cache_frames = false;
        self
    }

    pub fn manifest(&self) -> &DatasetManifest {
        self.manifest
    }

    fn video(&self, video_id: &str) -> Result<&VideoRecord> {
        self.manifest
            .video(video_id)
            .ok_or_else(|| FerError::Integrity(format!("window references unknown video {video_id}")))
    }

    /// The image of frame `index`, or of the nearest earlier frame when that
    /// index has no image (the nearest later one at the start of a video).
    pub fn frame(&self, video: &VideoRecord, index: u32) -> Result<ImageTensor> {
        if video.frames.is_empty() {
            return Err(FerError::Integrity(format!("video {} has no frames", video.video_id)));
        }
        let pos = video.frames.partition_point(|f| f.frame_index <= index);
        let record = &video.frames[pos.saturating_sub(1)];
        let path = &record.image_path;
        if let Some(img) = self.frames.read().expect("frame cache lock").get(path) {
            return Ok(img.as_ref().clone());
        }
        let img = load_frame(Path::new(path), self.input_size)?;
        if self.cache_frames {
            self.frames
                .write()
                .expect("frame cache lock")
                .insert(path.clone(), Arc::new(img.clone()));
        }
        Ok(img)
    }

    fn audio_track(&self, video: &VideoRecord) -> Result<Arc<AudioClip>> {
        if let Some(clip) = self.audio.read().expect("audio cache lock").get(&video.video_id) {
            return Ok(Arc::clone(clip));
        }
        let path = video.audio_path.as_ref().ok_or_else(|| FerError::StreamUnavailable {
            video_id: video.video_id.clone(),
            reason: "no audio track".into(),
        })?;
        let clip = read_wav(Path::new(path))?;
        let clip = Arc::new(resample_linear(&clip, self.mel.sample_rate)?);
        self.audio
            .write()
            .expect("audio cache lock")
            .insert(video.video_id.clone(), Arc::clone(&clip));
        Ok(clip)
    }

    /// Log-mel spectrogram of an audio window.
    pub fn spectrogram(&self, window: &Window) -> Result<SpectrogramGrid> {
        let video = self.video(&window.video_id)?;
        let track = self.audio_track(video)?;
        let start = video.fps.frame_to_seconds(window.start_frame);
        let extracted = extract_window(&track, start, AUDIO_WINDOW_SECONDS)?;
        let mut grid = mel_spectrogram(&extracted.clip, &self.mel)?;
        grid.origin = Some((window.video_id.clone(), (window.start_frame / window.len().max(1)) as usize));
        Ok(grid)
    }

    pub fn load(&self, stream: StreamKind, window: &Window) -> Result<StreamInput> {
        match stream {
            StreamKind::Visual => {
                let video = self.video(&window.video_id)?;
                Ok(StreamInput::Image(self.frame(video, window.start_frame)?))
            }
            StreamKind::Temporal => {
                let video = self.video(&window.video_id)?;
                let frames = window
                    .frames
                    .iter()
                    .map(|&i| self.frame(video, i))
                    .collect::<Result<Vec<_>>>()?;
                Ok(StreamInput::Shot(frames))
            }
            StreamKind::Audio => {
                let key = (window.video_id.clone(), window.start_frame);
                if let Some(img) = self.spectrogram_images.read().expect("spectrogram cache lock").get(&key) {
                    return Ok(StreamInput::Image(img.as_ref().clone()));
                }
                let grid = self.spectrogram(window)?;
                let img = spectrogram_to_image(&grid, self.input_size.0, self.input_size.1)?;
                self.spectrogram_images
                    .write()
                    .expect("spectrogram cache lock")
                    .insert(key, Arc::new(img.clone()));
                Ok(StreamInput::Image(img))
            }
        }
    }
}

/// Decode, resize to `size` and quantize to 8 bits.
pub fn load_frame(path: &Path, size: (usize, usize)) -> Result<ImageTensor> {
    let img = ImageTensor::load(path)?;
    let resized = resize_bilinear(&img, size.0, size.1)?;
    Ok(ImageTensor::from_rgb8(&resized.to_rgb8()))
}

/// Labeled windows of one stream kept by per-class subsampling.
pub struct TrainingView<'s, 'a> {
    source: &'s InputSource<'a>,
    windows: &'s StreamWindows,
    indices: Vec<usize>,
}

impl<'s, 'a> TrainingView<'s, 'a> {
    /// Keep `⌈fraction · count⌉` labeled windows of every class.
    pub fn new(source: &'s InputSource<'a>, windows: &'s StreamWindows, fraction: f64, seed: u64) -> Result<Self> {
        let labeled: Vec<usize> = (0..windows.windows.len()).filter(|&i| windows.labels[i].is_labeled()).collect();
        let classes: Vec<ExpressionClass> = labeled.iter().map(|&i| windows.labels[i]).collect();
        let indices = subsample_indices(&classes, fraction, seed)?
            .into_iter()
            .map(|j| labeled[j])
            .collect();
        Ok(TrainingView { source, windows, indices })
    }

    pub fn window_indices(&self) -> &[usize] {
        &self.indices
    }
}

impl TrainingSet for TrainingView<'_, '_> {
    fn len(&self) -> usize {
        self.indices.len()
    }

    fn class(&self, index: usize) -> ExpressionClass {
        self.windows.labels[self.indices[index]]
    }

    fn input(&self, index: usize) -> Result<StreamInput> {
        self.source
            .load(self.windows.stream, &self.windows.windows[self.indices[index]])
    }
}

/// Train the head of one stream on the labeled windows of `manifest`.
/// `config` must be finalized.
pub fn train_stream(manifest: &DatasetManifest, config: &RunConfig, stream: StreamKind) -> Result<TrainHistory> {
    let size = (config.dataset.input_size, config.dataset.input_size);
    let source = InputSource::new(manifest, size, config.mel.clone())?;
    let windows = plan_stream(manifest, stream, config.dataset.temporal_selection)?;
    let view = TrainingView::new(&source, &windows, config.dataset.subsample_fraction, config.seed)?;
    let augmenter = StreamAugmenter::new(stream, config.augment_config(stream))?;
    log::info!("{stream}: training on {} of {} windows", view.len(), windows.windows.len());
    train(&view, &config.train_config(stream), &augmenter, &config.backbone(stream))
}

/// Score every window of `stream` in `manifest`.
pub fn predict_stream(
    manifest: &DatasetManifest,
    config: &RunConfig,
    stream: StreamKind,
    head: &LinearHead,
) -> Result<StreamScores> {
    let size = (config.dataset.input_size, config.dataset.input_size);
    let source = InputSource::new(manifest, size, config.mel.clone())?;
    let windows = plan_stream(manifest, stream, config.dataset.temporal_selection)?;
    predict(stream, &config.backbone(stream), head, &windows.windows, |w| source.load(stream, w))
}
