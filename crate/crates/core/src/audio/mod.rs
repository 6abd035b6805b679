//! Audio stream features: 2-second windows of mono audio turned into log-mel
//! spectrogram images.

mod mel;
mod stft;
mod store;
mod wav;

use crate::augment::{resize_bilinear, ImageTensor};
use crate::{FerError, Result};

pub use mel::{hz_to_mel, mel_filterbank, mel_spectrogram, mel_to_hz, MelFilterbank};
pub use stft::{hann_window, stft_magnitude};
pub use store::{read_spectrogram, write_spectrogram, SPECTROGRAM_MAGIC};
pub use wav::{read_wav, resample_linear, write_wav};

/// Mono samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(FerError::invalid("audio clip is empty"));
        }
        if sample_rate == 0 {
            return Err(FerError::invalid("sample rate must be positive"));
        }
        if let Some(s) = samples.iter().find(|s| !(s.abs() <= 1.0)) {
            return Err(FerError::invalid(format!("sample {s} outside [-1, 1]")));
        }
        Ok(AudioClip { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_sec(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Dense row-major matrix of reals.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub f_min: f64,
    /// `None` means the Nyquist frequency.
    pub f_max: Option<f64>,
    pub log_floor: f64,
    /// Audio is resampled to this rate before analysis.
    pub sample_rate: u32,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            n_fft: 1024,
            hop: 256,
            n_mels: 128,
            f_min: 0.0,
            f_max: None,
            log_floor: 1e-6,
            sample_rate: 16_000,
        }
    }
}

impl MelConfig {
    pub fn f_max_for(&self, sample_rate: u32) -> f64 {
        self.f_max.unwrap_or(sample_rate as f64 / 2.0)
    }

    pub fn n_bins(&self) -> usize {
        self.n_fft / 2 + 1
    }

    pub fn validate(&self, sample_rate: u32) -> Result<()> {
        let nyquist = sample_rate as f64 / 2.0;
        let f_max = self.f_max_for(sample_rate);
        let problem = if self.n_fft < 2 || self.hop == 0 || self.hop > self.n_fft {
            Some(format!("need 0 < hop <= n_fft, got hop {} n_fft {}", self.hop, self.n_fft))
        } else if self.n_mels < 2 {
            Some(format!("n_mels {} < 2", self.n_mels))
        } else if !(self.f_min >= 0.0 && self.f_min < f_max && f_max <= nyquist) {
            Some(format!("need 0 <= f_min < f_max <= {nyquist}, got {} and {f_max}", self.f_min))
        } else if !(self.log_floor > 0.0) {
            Some(format!("log floor {} must be positive", self.log_floor))
        } else {
            None
        };
        if let Some(p) = problem {
            return Err(FerError::Config(format!("mel config: {p}")));
        }
        let bank = mel::build_filterbank(self, sample_rate);
        if let Some(m) = (0..bank.weights.rows).find(|&m| bank.weights.row(m).iter().sum::<f64>() <= 0.0) {
            return Err(FerError::Config(format!(
                "mel config: filter {m} covers no FFT bin; use fewer mels or a larger n_fft"
            )));
        }
        Ok(())
    }

    /// Number of STFT frames for a clip of `len` samples.
    pub fn n_frames(&self, len: usize) -> usize {
        if len < self.n_fft {
            0
        } else {
            1 + (len - self.n_fft) / self.hop
        }
    }
}

/// Log-mel energies: `n_mels` rows by `n_frames` columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrogramGrid {
    pub values: Matrix,
    /// Absent for grids read back from disk.
    pub config: Option<MelConfig>,
    /// `(video_id, window index)` when produced from a dataset window.
    pub origin: Option<(String, usize)>,
}

impl SpectrogramGrid {
    pub fn n_mels(&self) -> usize {
        self.values.rows
    }

    pub fn n_frames(&self) -> usize {
        self.values.cols
    }
}

/// A window cut from a longer recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedWindow {
    pub clip: AudioClip,
    /// True when the recording ended early and the tail is zeros.
    pub padded: bool,
}

/// Samples `[round(start·sr), round((start + duration)·sr))`, zero-padded at
/// the tail when the recording is shorter.
pub fn extract_window(full: &AudioClip, start_sec: f64, duration_sec: f64) -> Result<ExtractedWindow> {
    if !(start_sec >= 0.0) || !(duration_sec > 0.0) {
        return Err(FerError::invalid(format!(
            "window start {start_sec} s / duration {duration_sec} s must be non-negative / positive"
        )));
    }
    let sr = full.sample_rate as f64;
    let begin = (start_sec * sr).round() as usize;
    let end = ((start_sec + duration_sec) * sr).round() as usize;
    let len = full.samples.len();
    if begin >= len {
        return Err(FerError::WindowOutOfRange {
            start_sec,
            duration_sec: full.duration_sec(),
        });
    }
    let mut samples = full.samples[begin..end.min(len)].to_vec();
    let padded = end > len;
    samples.resize(end - begin, 0.0);
    Ok(ExtractedWindow {
        clip: AudioClip::new(samples, full.sample_rate)?,
        padded,
    })
}

/// Min-max normalize to `[0, 1]`, replicate to three channels and resize.
/// A constant grid maps to a constant 0.5 image.
pub fn spectrogram_to_image(grid: &SpectrogramGrid, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    let values = &grid.values;
    if values.data.is_empty() {
        return Err(FerError::invalid("empty spectrogram"));
    }
    let normalized = min_max(&values.data);
    let data = normalized.iter().flat_map(|&v| [v, v, v]).collect();
    let image = ImageTensor::new(values.rows, values.cols, data)?;
    let resized = resize_bilinear(&image, out_h, out_w)?;
    // Interpolation can miss the extreme cells; normalize again so the
    // output spans exactly [0, 1].
    let data = min_max(resized.data());
    ImageTensor::new(out_h, out_w, data)
}

fn min_max<T: Copy + Into<f64>>(values: &[T]) -> Vec<f32> {
    let (lo, hi) = values
        .iter()
        .map(|&v| v.into())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if hi > lo {
        values.iter().map(|&v| ((v.into() - lo) / (hi - lo)) as f32).collect()
    } else {
        vec![0.5; values.len()]
    }
}
