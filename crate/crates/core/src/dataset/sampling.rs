//! Sampling plans: which frames each stream looks at.
//!
//! * visual: every frame is its own window;
//! * temporal: one window per full second, 16 frames selected inside it;
//! * audio: consecutive two-second windows.
//!
//! Trailing partial windows are dropped.

use rand::seq::index;

use super::{StreamKind, VideoRecord};
use crate::rng;
use crate::{FerError, Result};

pub const FRAMES_PER_SHOT: usize = 16;
const AUDIO_WINDOW_SECONDS: u32 = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub video_id: String,
    pub start_frame: u32,
    /// Exclusive.
    pub end_frame: u32,
    pub frames: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingPlan {
    pub stream: StreamKind,
    pub windows: Vec<Window>,
}

/// How the 16 frames of a temporal shot are picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TemporalSelection {
    /// Index `k` of 16 sits at `start + round(k · len / 16)`.
    #[default]
    Strided,
    /// 16 distinct positions drawn uniformly per window.
    Random { seed: u64 },
}

pub fn sample_visual_frames(video: &VideoRecord) -> SamplingPlan {
    let windows = video
        .frames
        .iter()
        .map(|f| Window {
            video_id: video.video_id.clone(),
            start_frame: f.frame_index,
            end_frame: f.frame_index + 1,
            frames: vec![f.frame_index],
        })
        .collect();
    SamplingPlan {
        stream: StreamKind::Visual,
        windows,
    }
}

pub fn sample_temporal_shots(video: &VideoRecord) -> Result<SamplingPlan> {
    sample_temporal_shots_with(video, TemporalSelection::Strided)
}

pub fn sample_temporal_shots_with(video: &VideoRecord, selection: TemporalSelection) -> Result<SamplingPlan> {
    let len = video.fps.frames_in(1);
    if (len as usize) < FRAMES_PER_SHOT {
        return Err(FerError::UnsupportedRate {
            fps: video.fps.as_f64(),
            min: FRAMES_PER_SHOT as u32,
        });
    }
    let count = video.timeline_len() / len;
    let windows = (0..count)
        .map(|w| {
            let start = w * len;
            let frames = match selection {
                TemporalSelection::Strided => (0..FRAMES_PER_SHOT as u32)
                    // round(k·len/16), halves rounded up
                    .map(|k| start + ((2 * k * len + FRAMES_PER_SHOT as u32) / (2 * FRAMES_PER_SHOT as u32)).min(len - 1))
                    .collect(),
                TemporalSelection::Random { seed } => {
                    let mut rng = rng::derived(seed, &[w as u64]);
                    let mut picks: Vec<u32> = index::sample(&mut rng, len as usize, FRAMES_PER_SHOT)
                        .into_iter()
                        .map(|i| start + i as u32)
                        .collect();
                    picks.sort_unstable();
                    picks
                }
            };
            Window {
                video_id: video.video_id.clone(),
                start_frame: start,
                end_frame: start + len,
                frames,
            }
        })
        .collect();
    Ok(SamplingPlan {
        stream: StreamKind::Temporal,
        windows,
    })
}

/// Two-second windows; window `w` covers audio seconds
/// `[start_frame / fps, end_frame / fps)`.
pub fn sample_audio_windows(video: &VideoRecord) -> Result<SamplingPlan> {
    if video.audio_path.is_none() {
        return Err(FerError::StreamUnavailable {
            video_id: video.video_id.clone(),
            reason: "no audio file".into(),
        });
    }
    let len = video.fps.frames_in(AUDIO_WINDOW_SECONDS);
    let count = if len == 0 { 0 } else { video.timeline_len() / len };
    let windows = (0..count)
        .map(|w| {
            let start = w * len;
            Window {
                video_id: video.video_id.clone(),
                start_frame: start,
                end_frame: start + len,
                frames: (start..start + len).collect(),
            }
        })
        .collect();
    Ok(SamplingPlan {
        stream: StreamKind::Audio,
        windows,
    })
}

impl Window {
    pub fn len(&self) -> u32 {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn seconds(&self, fps: super::FrameRate) -> (f64, f64) {
        (fps.frame_to_seconds(self.start_frame), fps.frame_to_seconds(self.end_frame))
    }
}
