use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{AudioClip, Matrix, MelConfig};
use crate::{FerError, Result};

/// Periodic Hann window of length `n`.
pub fn hann_window(n: usize) -> Vec<f64> {
    (0..n).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos()).collect()
}

/// Magnitude STFT: `(n_fft/2 + 1)` rows by `n_frames` columns. Frame `t`
/// covers samples `[t·hop, t·hop + n_fft)`.
pub fn stft_magnitude(clip: &AudioClip, config: &MelConfig) -> Result<Matrix> {
    let n_fft = config.n_fft;
    let samples = clip.samples();
    if samples.len() < n_fft {
        return Err(FerError::invalid(format!(
            "clip of {} samples shorter than n_fft {n_fft}",
            samples.len()
        )));
    }
    if config.hop == 0 {
        return Err(FerError::invalid("hop must be positive"));
    }
    let n_frames = config.n_frames(samples.len());
    let n_bins = config.n_bins();
    let window = hann_window(n_fft);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);
    let mut buffer = vec![Complex::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    let mut out = Matrix::zeros(n_bins, n_frames);
    for t in 0..n_frames {
        let frame = &samples[t * config.hop..t * config.hop + n_fft];
        for ((slot, &x), &w) in buffer.iter_mut().zip(frame).zip(&window) {
            *slot = Complex::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buffer, &mut scratch);
        for (k, value) in buffer.iter().take(n_bins).enumerate() {
            out.set(k, t, value.norm());
        }
    }
    Ok(out)
}
