//! Corpus description: expression labels, per-frame and per-video records,
//! manifests, class statistics and the three streams' sampling plans.

mod annotation;
mod manifest;
mod sampling;
mod stats;

use std::fmt;
use std::str::FromStr;

use crate::{FerError, Result};

pub use annotation::{fit_labels, parse_annotation_file, render_annotation_file, ANNOTATION_HEADER};
pub use manifest::{build_manifest, read_manifest, write_manifest};
pub use sampling::{
    sample_audio_windows, sample_temporal_shots, sample_temporal_shots_with, sample_visual_frames,
    SamplingPlan, TemporalSelection, Window, FRAMES_PER_SHOT,
};
pub use stats::{class_distribution, subsample_indices, subsample_per_class, ClassDistribution};

pub const NUM_CLASSES: usize = 8;

/// One of the eight expression categories, or the sentinel for frames that
/// carry no usable label. Ordinals index every score vector in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExpressionClass {
    Neutral,
    Anger,
    Disgust,
    Fear,
    Happiness,
    Sadness,
    Surprise,
    Other,
    Unlabeled,
}

impl ExpressionClass {
    pub const ALL: [ExpressionClass; NUM_CLASSES] = [
        ExpressionClass::Neutral,
        ExpressionClass::Anger,
        ExpressionClass::Disgust,
        ExpressionClass::Fear,
        ExpressionClass::Happiness,
        ExpressionClass::Sadness,
        ExpressionClass::Surprise,
        ExpressionClass::Other,
    ];

    /// Under-represented classes used as half-mix references.
    pub const MINORITY: [ExpressionClass; 4] = [
        ExpressionClass::Anger,
        ExpressionClass::Disgust,
        ExpressionClass::Fear,
        ExpressionClass::Surprise,
    ];

    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            -1 => Some(ExpressionClass::Unlabeled),
            0..=7 => Some(Self::ALL[code as usize]),
            _ => None,
        }
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Annotation-file code: 0..=7, or -1 for unlabeled.
    pub fn code(self) -> i64 {
        self.index().map_or(-1, |i| i as i64)
    }

    /// Score-vector slot, `None` for [`ExpressionClass::Unlabeled`].
    pub fn index(self) -> Option<usize> {
        match self {
            ExpressionClass::Unlabeled => None,
            c => Some(c as usize),
        }
    }

    pub fn is_labeled(self) -> bool {
        self != ExpressionClass::Unlabeled
    }

    pub fn name(self) -> &'static str {
        match self {
            ExpressionClass::Neutral => "neutral",
            ExpressionClass::Anger => "anger",
            ExpressionClass::Disgust => "disgust",
            ExpressionClass::Fear => "fear",
            ExpressionClass::Happiness => "happiness",
            ExpressionClass::Sadness => "sadness",
            ExpressionClass::Surprise => "surprise",
            ExpressionClass::Other => "other",
            ExpressionClass::Unlabeled => "unlabeled",
        }
    }
}

impl fmt::Display for ExpressionClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
}

impl Split {
    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
        }
    }
}

impl FromStr for Split {
    type Err = FerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            other => Err(FerError::invalid(format!("unknown split `{other}`"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.dir_name())
    }
}

/// The three modality paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StreamKind {
    Visual,
    Temporal,
    Audio,
}

impl StreamKind {
    pub const ALL: [StreamKind; 3] = [StreamKind::Visual, StreamKind::Temporal, StreamKind::Audio];

    pub fn name(self) -> &'static str {
        match self {
            StreamKind::Visual => "visual",
            StreamKind::Temporal => "temporal",
            StreamKind::Audio => "audio",
        }
    }
}

impl FromStr for StreamKind {
    type Err = FerError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "visual" => Ok(StreamKind::Visual),
            "temporal" => Ok(StreamKind::Temporal),
            "audio" => Ok(StreamKind::Audio),
            other => Err(FerError::invalid(format!("unknown stream `{other}`"))),
        }
    }
}

impl fmt::Display for StreamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Frame rate as a positive rational number of frames per second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameRate {
    num: u32,
    den: u32,
}

impl FrameRate {
    pub const DEFAULT: FrameRate = FrameRate { num: 30, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 {
            return Err(FerError::invalid(format!("frame rate {num}/{den} must be positive")));
        }
        Ok(FrameRate { num, den })
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Length in frames of a span of `seconds` whole seconds, rounded.
    pub fn frames_in(self, seconds: u32) -> u32 {
        let n = self.num as u64 * seconds as u64;
        ((2 * n + self.den as u64) / (2 * self.den as u64)) as u32
    }

    pub fn frame_to_seconds(self, frame: u32) -> f64 {
        frame as f64 * self.den as f64 / self.num as f64
    }
}

impl Default for FrameRate {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for FrameRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for FrameRate {
    type Err = FerError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FerError::invalid(format!("malformed frame rate `{s}`"));
        match s.split_once('/') {
            Some((n, d)) => FrameRate::new(n.trim().parse().map_err(|_| bad())?, d.trim().parse().map_err(|_| bad())?),
            None => FrameRate::new(s.trim().parse().map_err(|_| bad())?, 1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameRecord {
    pub video_id: String,
    /// Position on the video's frame timeline.
    pub frame_index: u32,
    pub image_path: String,
    pub label: ExpressionClass,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VideoRecord {
    pub video_id: String,
    pub fps: FrameRate,
    /// Sorted by `frame_index`, indices unique.
    pub frames: Vec<FrameRecord>,
    pub audio_path: Option<String>,
    /// Known when the manifest was built from disk; persisted manifests leave
    /// it to be read from the audio file header.
    pub audio_sample_rate: Option<u32>,
}

impl VideoRecord {
    /// Length of the frame timeline: one past the last frame index.
    pub fn timeline_len(&self) -> u32 {
        self.frames.last().map_or(0, |f| f.frame_index + 1)
    }

    pub fn frame(&self, frame_index: u32) -> Option<&FrameRecord> {
        self.frames
            .binary_search_by_key(&frame_index, |f| f.frame_index)
            .ok()
            .map(|i| &self.frames[i])
    }

    pub(crate) fn validate(&self) -> Result<()> {
        for pair in self.frames.windows(2) {
            if pair[0].frame_index >= pair[1].frame_index {
                return Err(FerError::Integrity(format!(
                    "video {}: frame indices not strictly increasing at {}",
                    self.video_id, pair[1].frame_index
                )));
            }
        }
        if let Some(f) = self.frames.iter().find(|f| f.image_path.is_empty() || f.video_id != self.video_id) {
            return Err(FerError::Integrity(format!(
                "video {}: bad frame record at index {}",
                self.video_id, f.frame_index
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub split: Split,
    pub videos: Vec<VideoRecord>,
}

impl DatasetManifest {
    pub fn new(split: Split, videos: Vec<VideoRecord>) -> Result<Self> {
        let manifest = DatasetManifest { split, videos };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for video in &self.videos {
            if !ids.insert(video.video_id.as_str()) {
                return Err(FerError::Integrity(format!("duplicate video id {}", video.video_id)));
            }
            video.validate()?;
        }
        Ok(())
    }

    pub fn video(&self, video_id: &str) -> Option<&VideoRecord> {
        self.videos.iter().find(|v| v.video_id == video_id)
    }

    pub fn frames(&self) -> impl Iterator<Item = &FrameRecord> {
        self.videos.iter().flat_map(|v| v.frames.iter())
    }

    pub fn frame_count(&self) -> usize {
        self.videos.iter().map(|v| v.frames.len()).sum()
    }
}
