//! Fixed patch-mean featurizers standing in for the image and video
//! backbones. Every stage is linear in the pixels.

use super::StreamInput;
use crate::augment::ImageTensor;
use crate::dataset::{StreamKind, FRAMES_PER_SHOT};
use crate::{FerError, Result};

/// Patches per side; features are per-channel means over a `PATCH_GRID²` grid.
pub const PATCH_GRID: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackboneKind {
    /// Image → per-channel patch means.
    FlattenMean,
    /// Mean of the per-frame patch-mean features of a 16-frame shot.
    TemporalMean,
    /// Patch means of a spectrogram image.
    SpectrogramMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackboneSpec {
    pub kind: BackboneKind,
    /// Expected `(height, width)` of every input image.
    pub input_size: (usize, usize),
}

impl BackboneSpec {
    pub fn for_stream(stream: StreamKind, input_size: (usize, usize)) -> Self {
        let kind = match stream {
            StreamKind::Visual => BackboneKind::FlattenMean,
            StreamKind::Temporal => BackboneKind::TemporalMean,
            StreamKind::Audio => BackboneKind::SpectrogramMean,
        };
        BackboneSpec { kind, input_size }
    }

    pub fn output_dim(&self) -> usize {
        3 * PATCH_GRID * PATCH_GRID
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.input_size;
        if h < PATCH_GRID || w < PATCH_GRID {
            return Err(FerError::Config(format!(
                "input size {h}x{w} smaller than the {PATCH_GRID}x{PATCH_GRID} patch grid"
            )));
        }
        Ok(())
    }

    fn check_image(&self, image: &ImageTensor) -> Result<()> {
        if (image.height(), image.width()) != self.input_size {
            return Err(FerError::invalid(format!(
                "input {}x{} does not match backbone size {}x{}",
                image.height(),
                image.width(),
                self.input_size.0,
                self.input_size.1
            )));
        }
        Ok(())
    }
}

fn patch_means(image: &ImageTensor) -> Vec<f64> {
    let (h, w, c) = image.dims();
    let mut sums = vec![0.0f64; PATCH_GRID * PATCH_GRID * c];
    let row_patch: Vec<usize> = (0..h).map(|y| y * PATCH_GRID / h).collect();
    let col_patch: Vec<usize> = (0..w).map(|x| x * PATCH_GRID / w).collect();
    let data = image.data();
    for y in 0..h {
        let base = row_patch[y] * PATCH_GRID;
        let row = &data[y * w * c..(y + 1) * w * c];
        for (x, px) in row.chunks_exact(c).enumerate() {
            let slot = (base + col_patch[x]) * c;
            for (k, &v) in px.iter().enumerate() {
                sums[slot + k] += v as f64;
            }
        }
    }
    // patch p spans [p·n/8, (p+1)·n/8) rounded up at each end
    let extent = |p: usize, n: usize| (((p + 1) * n).div_ceil(PATCH_GRID) - (p * n).div_ceil(PATCH_GRID)) as f64;
    for py in 0..PATCH_GRID {
        for px in 0..PATCH_GRID {
            let area = extent(py, h) * extent(px, w);
            for k in 0..c {
                sums[(py * PATCH_GRID + px) * c + k] /= area;
            }
        }
    }
    sums
}

/// Map one stream input to its feature vector.
pub fn featurize(spec: &BackboneSpec, input: &StreamInput) -> Result<Vec<f64>> {
    match (spec.kind, input) {
        (BackboneKind::FlattenMean | BackboneKind::SpectrogramMean, StreamInput::Image(image)) => {
            spec.check_image(image)?;
            Ok(patch_means(image))
        }
        (BackboneKind::TemporalMean, StreamInput::Shot(frames)) => {
            if frames.len() != FRAMES_PER_SHOT {
                return Err(FerError::invalid(format!(
                    "temporal shot has {} frames, expected {FRAMES_PER_SHOT}",
                    frames.len()
                )));
            }
            let mut acc = vec![0.0; spec.output_dim()];
            for frame in frames {
                spec.check_image(frame)?;
                for (a, f) in acc.iter_mut().zip(patch_means(frame)) {
                    *a += f;
                }
            }
            Ok(acc.into_iter().map(|a| a / FRAMES_PER_SHOT as f64).collect())
        }
        (kind, _) => Err(FerError::invalid(format!("input kind does not match backbone {kind:?}"))),
    }
}
