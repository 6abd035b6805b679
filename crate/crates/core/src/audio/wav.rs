use std::path::Path;

use super::AudioClip;
use crate::{FerError, Result};

/// Read a PCM or float WAV file, averaging channels to mono.
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let wav_err = |source| FerError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1) as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 / scale))
                .collect::<std::result::Result<_, _>>()
                .map_err(wav_err)?
        }
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(wav_err)?,
    };
    let mono: Vec<f64> = interleaved
        .chunks(channels)
        .map(|frame| (frame.iter().sum::<f64>() / frame.len() as f64).clamp(-1.0, 1.0))
        .collect();
    AudioClip::new(mono, spec.sample_rate)
}

/// Write a mono 16-bit PCM WAV file.
pub fn write_wav(path: &Path, clip: &AudioClip) -> Result<()> {
    let wav_err = |source| FerError::Wav {
        path: path.to_path_buf(),
        source,
    };
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: clip.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in clip.samples() {
        writer
            .write_sample((s * 32767.0).round().clamp(-32768.0, 32767.0) as i16)
            .map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

/// Linear-interpolation resampling.
pub fn resample_linear(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    if target_rate == 0 {
        return Err(FerError::invalid("target sample rate must be positive"));
    }
    let src = clip.samples();
    let ratio = clip.sample_rate() as f64 / target_rate as f64;
    let out_len = ((src.len() as f64) / ratio).floor().max(1.0) as usize;
    let samples = (0..out_len)
        .map(|i| {
            let pos = i as f64 * ratio;
            let i0 = (pos.floor() as usize).min(src.len() - 1);
            let i1 = (i0 + 1).min(src.len() - 1);
            let frac = pos - i0 as f64;
            src[i0] * (1.0 - frac) + src[i1] * frac
        })
        .collect();
    AudioClip::new(samples, target_rate)
}
