use super::{stft_magnitude, AudioClip, Matrix, MelConfig, SpectrogramGrid};
use crate::Result;

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular mel filters sampled at the FFT bin frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    /// `n_mels × (n_fft/2 + 1)`.
    pub weights: Matrix,
    /// `n_mels + 2` band edges in Hz; filter `m` rises from `edges[m]`, peaks
    /// at `edges[m+1]` and falls to `edges[m+2]`.
    pub edges_hz: Vec<f64>,
    pub bin_hz: f64,
    /// Bins with a non-zero weight, per filter.
    support: Vec<std::ops::Range<usize>>,
}

impl MelFilterbank {
    pub fn n_mels(&self) -> usize {
        self.weights.rows
    }

    pub fn peak_hz(&self, m: usize) -> f64 {
        self.edges_hz[m + 1]
    }

    /// Continuous triangle response of filter `m` at `freq` Hz.
    pub fn weight_at(&self, m: usize, freq: f64) -> f64 {
        let (lo, peak, hi) = (self.edges_hz[m], self.edges_hz[m + 1], self.edges_hz[m + 2]);
        if freq <= lo || freq >= hi {
            0.0
        } else if freq <= peak {
            (freq - lo) / (peak - lo)
        } else {
            (hi - freq) / (hi - peak)
        }
    }

    /// Mel energies for one column of power values.
    pub fn apply(&self, power: &[f64]) -> Vec<f64> {
        (0..self.weights.rows)
            .map(|m| {
                let r = self.support[m].clone();
                self.weights.row(m)[r.clone()].iter().zip(&power[r]).map(|(w, p)| w * p).sum()
            })
            .collect()
    }
}

pub(super) fn build_filterbank(config: &MelConfig, sample_rate: u32) -> MelFilterbank {
    let n_bins = config.n_bins();
    let bin_hz = sample_rate as f64 / config.n_fft as f64;
    let (mel_lo, mel_hi) = (hz_to_mel(config.f_min), hz_to_mel(config.f_max_for(sample_rate)));
    let step = (mel_hi - mel_lo) / (config.n_mels + 1) as f64;
    let edges_hz: Vec<f64> = (0..config.n_mels + 2).map(|i| mel_to_hz(mel_lo + step * i as f64)).collect();

    let mut bank = MelFilterbank {
        weights: Matrix::zeros(config.n_mels, n_bins),
        edges_hz,
        bin_hz,
        support: Vec::with_capacity(config.n_mels),
    };
    for m in 0..config.n_mels {
        for k in 0..n_bins {
            let w = bank.weight_at(m, k as f64 * bin_hz);
            bank.weights.set(m, k, w);
        }
        let row = bank.weights.row(m);
        let first = row.iter().position(|&w| w != 0.0).unwrap_or(0);
        let last = row.iter().rposition(|&w| w != 0.0).map_or(0, |l| l + 1);
        bank.support.push(first..last.max(first));
    }
    bank
}

/// Filterbank for `config` at `sample_rate`. The configuration is assumed
/// valid (see [`MelConfig::validate`]).
pub fn mel_filterbank(config: &MelConfig, sample_rate: u32) -> MelFilterbank {
    build_filterbank(config, sample_rate)
}

/// `log(filterbank · |STFT|² + floor)`.
pub fn mel_spectrogram(clip: &AudioClip, config: &MelConfig) -> Result<SpectrogramGrid> {
    config.validate(clip.sample_rate())?;
    let magnitude = stft_magnitude(clip, config)?;
    let bank = build_filterbank(config, clip.sample_rate());
    let mut values = Matrix::zeros(config.n_mels, magnitude.cols);
    let mut power = vec![0.0; magnitude.rows];
    for t in 0..magnitude.cols {
        for (k, p) in power.iter_mut().enumerate() {
            let m = magnitude.get(k, t);
            *p = m * m;
        }
        for (m, energy) in bank.apply(&power).into_iter().enumerate() {
            values.set(m, t, (energy + config.log_floor).ln());
        }
    }
    Ok(SpectrogramGrid {
        values,
        config: Some(config.clone()),
        origin: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn bank() -> MelFilterbank {
        mel_filterbank(&MelConfig::default(), 16000)
    }

    #[test]
    fn mel_scale_fixed_points() {
        assert_eq!(hz_to_mel(0.0), 0.0);
        assert!((hz_to_mel(700.0) - 2595.0 * 2f64.log10()).abs() < 1e-9);
        assert!((hz_to_mel(700.0) - 781.17).abs() < 0.01);
        for f in [0.0, 100.0, 440.0, 7999.0] {
            assert!((mel_to_hz(hz_to_mel(f)) - f).abs() < 1e-9);
        }
    }

    #[test]
    fn mel_is_strictly_increasing() {
        let mut prev = hz_to_mel(0.0);
        for i in 1..2000 {
            let m = hz_to_mel(i as f64 * 4.0);
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn filters_are_nonnegative_with_one_maximal_bin() {
        let b = bank();
        assert_eq!((b.weights.rows, b.weights.cols), (128, 513));
        for m in 0..128 {
            let row = b.weights.row(m);
            assert!(row.iter().all(|&w| w >= 0.0));
            assert!(row.iter().sum::<f64>() > 0.0);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(row.iter().filter(|&&w| w == max).count(), 1, "filter {m}");
        }
    }

    #[test]
    fn peaks_increase() {
        let b = bank();
        for m in 1..b.n_mels() {
            assert!(b.peak_hz(m) > b.peak_hz(m - 1));
        }
    }

    #[test]
    fn every_inner_bin_is_covered() {
        let b = bank();
        for k in 1..512 {
            assert!((0..128).any(|m| b.weights.get(m, k) > 0.0), "bin {k}");
        }
        let ones = vec![1.0; 513];
        assert!(b.apply(&ones).iter().all(|&e| e > 0.0));
    }

    #[test]
    fn filters_are_unimodal_on_fine_grid() {
        let b = bank();
        for m in 0..b.n_mels() {
            let values: Vec<f64> = (0..=8000).map(|i| b.weight_at(m, i as f64)).collect();
            let peak = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            assert!(values[..=peak].windows(2).all(|w| w[1] >= w[0]));
            assert!(values[peak..].windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn silence_hits_the_floor() {
        let clip = AudioClip::new(vec![0.0; 32000], 16000).unwrap();
        let g = mel_spectrogram(&clip, &MelConfig::default()).unwrap();
        assert_eq!(g.n_frames(), 1 + (32000 - 1024) / 256);
        let floor = 1e-6f64.ln();
        assert!(g.values.data.iter().all(|&v| v == floor));
    }

    #[test]
    fn doubling_amplitude_raises_every_cell() {
        let tone = |a: f64| -> Vec<f64> {
            (0..16000).map(|n| a * ((2.0 * PI * 1000.0 * n as f64 / 16000.0).sin() + 0.3 * (n as f64 * 0.37).sin()) / 1.3).collect()
        };
        let g1 = mel_spectrogram(&AudioClip::new(tone(0.3), 16000).unwrap(), &MelConfig::default()).unwrap();
        let g2 = mel_spectrogram(&AudioClip::new(tone(0.6), 16000).unwrap(), &MelConfig::default()).unwrap();
        let floor = 1e-6f64.ln();
        for (a, b) in g1.values.data.iter().zip(&g2.values.data) {
            if *a > floor {
                assert!(b > a);
            }
        }
    }

    #[test]
    fn pipeline_is_bit_deterministic() {
        let samples: Vec<f64> = (0..20000).map(|n| ((n * 7919) % 1000) as f64 / 1000.0 - 0.5).collect();
        let clip = AudioClip::new(samples, 16000).unwrap();
        let a = mel_spectrogram(&clip, &MelConfig::default()).unwrap();
        let b = mel_spectrogram(&clip, &MelConfig::default()).unwrap();
        assert!(a.values.data.iter().zip(&b.values.data).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
