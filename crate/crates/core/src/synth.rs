//! Synthetic corpora in the on-disk layout read by `build_manifest`.
//!
//! Class `c` is split into bits `(b2, b1, b0) = (c >> 2, (c >> 1) & 1, c & 1)`
//! and each stream sees a different subset:
//!
//! * every frame shows `b2` cleanly (bright top or bright bottom half);
//! * every frame shows `b1` as a faint ring whose brightness is buried in
//!   per-frame noise, so single frames read it poorly and 16-frame shots
//!   read it well;
//! * the audio track encodes `b0` as the pitch of a tone.
//!
//! Labels are constant over two-second segments so that every stream's
//! windows are label-pure.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::audio::{write_wav, AudioClip};
use crate::augment::ImageTensor;
use crate::dataset::{
    render_annotation_file, DatasetManifest, ExpressionClass, FrameRate, FrameRecord, Split, VideoRecord,
    NUM_CLASSES,
};
use crate::rng;
use crate::{FerError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub train_videos: usize,
    pub validation_videos: usize,
    /// Frames per video; a multiple of the segment length keeps all windows whole.
    pub frames_per_video: u32,
    /// Frames sharing one label.
    pub segment_frames: u32,
    pub image_size: usize,
    pub sample_rate: u32,
    /// Ring brightness offset carrying `b1`.
    pub ring_offset: f64,
    /// Standard deviation of the per-frame ring brightness noise.
    pub ring_noise: f64,
    /// Standard deviation of per-pixel noise.
    pub pixel_noise: f64,
    /// Tone frequencies for `b0 = 0` and `b0 = 1`.
    pub tones_hz: (f64, f64),
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_videos: 3,
            validation_videos: 2,
            frames_per_video: 480,
            segment_frames: 60,
            image_size: 32,
            sample_rate: 16_000,
            ring_offset: 0.05,
            ring_noise: 0.1,
            pixel_noise: 0.02,
            tones_hz: (440.0, 1760.0),
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let err = |m: &str| Err(FerError::Config(format!("synth: {m}")));
        if self.frames_per_video == 0 || self.segment_frames == 0 {
            return err("frames per video and segment length must be positive");
        }
        if self.image_size < 8 {
            return err("image size must be at least 8");
        }
        if self.sample_rate < 2 * self.tones_hz.1.max(self.tones_hz.0) as u32 {
            return err("tones must lie below the Nyquist frequency");
        }
        if [self.ring_offset, self.ring_noise, self.pixel_noise].iter().any(|v| !(*v >= 0.0)) {
            return err("offsets and noise levels must be non-negative");
        }
        Ok(())
    }
}

fn bits(class: ExpressionClass) -> (bool, bool, bool) {
    let c = class.index().unwrap_or(0);
    (c & 4 != 0, c & 2 != 0, c & 1 != 0)
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Frame of a video showing `class`.
pub fn synth_frame(config: &SynthConfig, class: ExpressionClass, rng: &mut ChaCha8Rng) -> Result<ImageTensor> {
    let (b2, b1, _) = bits(class);
    let n = config.image_size;
    let ring = 0.5 + if b1 { config.ring_offset } else { -config.ring_offset } + config.ring_noise * gaussian(rng);
    let border = (n / 8).max(1);
    let noise: Vec<f64> = (0..n * n).map(|_| config.pixel_noise * gaussian(rng)).collect();
    ImageTensor::from_fn(n, n, |y, x, _| {
        let on_ring = y < border || x < border || y >= n - border || x >= n - border;
        let v = if on_ring {
            ring
        } else if (y < n / 2) == b2 {
            0.7
        } else {
            0.3
        };
        (v + noise[y * n + x]).clamp(0.0, 1.0) as f32
    })
}

/// Audio samples for one segment showing `class`.
fn synth_tone(config: &SynthConfig, class: ExpressionClass, seconds: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (_, _, b0) = bits(class);
    let f = if b0 { config.tones_hz.1 } else { config.tones_hz.0 };
    let sr = config.sample_rate as f64;
    let len = (seconds * sr).round() as usize;
    (0..len)
        .map(|i| {
            let t = i as f64 / sr;
            (0.5 * (2.0 * std::f64::consts::PI * f * t).sin() + 0.05 * gaussian(rng)).clamp(-1.0, 1.0)
        })
        .collect()
}

/// Write one split of the corpus under `<root>/<split>/`. Segment classes
/// run through shuffled cycles of all eight classes across the whole split,
/// so a split with `8k` segments is exactly balanced.
pub fn write_split(root: &Path, split: Split, videos: usize, config: &SynthConfig) -> Result<()> {
    config.validate()?;
    let split_dir = root.join(split.dir_name());
    let ann_dir = split_dir.join("annotations");
    let audio_dir = split_dir.join("audio");
    for d in [&ann_dir, &audio_dir] {
        fs::create_dir_all(d).map_err(|e| FerError::io(d, e))?;
    }
    let fps = FrameRate::DEFAULT;
    let split_tag = match split {
        Split::Train => 0,
        Split::Validation => 1,
    };
    let segments = config.frames_per_video.div_ceil(config.segment_frames) as usize;
    let mut order_rng = rng::derived(config.seed, &[split_tag]);
    let mut order: Vec<usize> = Vec::with_capacity(segments * videos);
    while order.len() < segments * videos {
        let mut cycle: Vec<usize> = (0..NUM_CLASSES).collect();
        cycle.shuffle(&mut order_rng);
        order.extend(cycle);
    }

    for v in 0..videos {
        let video_id = format!("{}{v:03}", split.dir_name());
        let frames_dir = split_dir.join(&video_id).join("frames");
        fs::create_dir_all(&frames_dir).map_err(|e| FerError::io(&frames_dir, e))?;
        let mut rng = rng::derived(config.seed, &[split_tag, 1, v as u64]);
        let labels: Vec<ExpressionClass> = (0..config.frames_per_video)
            .map(|i| ExpressionClass::ALL[order[v * segments + (i / config.segment_frames) as usize]])
            .collect();

        for (i, &class) in labels.iter().enumerate() {
            let img = synth_frame(config, class, &mut rng)?;
            img.save_png(&frames_dir.join(format!("{i:05}.png")))?;
        }
        let ann = ann_dir.join(format!("{video_id}.txt"));
        fs::write(&ann, render_annotation_file(&labels)).map_err(|e| FerError::io(&ann, e))?;

        let mut samples = Vec::new();
        for s in 0..segments {
            let first = s as u32 * config.segment_frames;
            let count = config.segment_frames.min(config.frames_per_video - first);
            let seconds = count as f64 / fps.as_f64();
            samples.extend(synth_tone(config, labels[first as usize], seconds, &mut rng));
        }
        let wav = audio_dir.join(format!("{video_id}.wav"));
        write_wav(&wav, &AudioClip::new(samples, config.sample_rate)?)?;
    }
    Ok(())
}

/// Write both splits.
pub fn write_corpus(root: &Path, config: &SynthConfig) -> Result<()> {
    write_split(root, Split::Train, config.train_videos, config)?;
    write_split(root, Split::Validation, config.validation_videos, config)
}

/// Train-split frame counts per class of the reference corpus.
pub const REFERENCE_TRAIN_COUNTS: [u64; NUM_CLASSES] = [175_500, 16_356, 10_725, 9_080, 89_917, 79_140, 30_096, 163_189];

/// A label-only manifest with the reference train-split class counts: one
/// video per class, frame paths are placeholders.
pub fn reference_manifest() -> DatasetManifest {
    let videos = ExpressionClass::ALL
        .iter()
        .zip(REFERENCE_TRAIN_COUNTS)
        .map(|(&class, count)| {
            let video_id = format!("reference_{}", class.name());
            let frames = (0..count as u32)
                .map(|i| FrameRecord {
                    video_id: video_id.clone(),
                    frame_index: i,
                    image_path: format!("{video_id}/{i:06}.jpg"),
                    label: class,
                })
                .collect();
            VideoRecord {
                video_id,
                fps: FrameRate::DEFAULT,
                frames,
                audio_path: None,
                audio_sample_rate: None,
            }
        })
        .collect();
    DatasetManifest::new(Split::Train, videos).expect("generated manifest is valid")
}
