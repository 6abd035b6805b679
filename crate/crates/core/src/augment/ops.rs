use rand::Rng;

use super::image::{ImageTensor, CHANNELS};
use crate::{FerError, Result};

pub fn horizontal_flip(image: &ImageTensor) -> ImageTensor {
    let (h, w) = (image.height(), image.width());
    let src = image.data();
    let mut data = Vec::with_capacity(src.len());
    for y in 0..h {
        let row = &src[y * w * CHANNELS..(y + 1) * w * CHANNELS];
        for px in row.chunks_exact(CHANNELS).rev() {
            data.extend_from_slice(px);
        }
    }
    ImageTensor::from_raw(h, w, data)
}

/// Copy the `out_h × out_w` block whose top-left corner is `(top, left)`.
pub fn crop(image: &ImageTensor, top: usize, left: usize, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 || top + out_h > image.height() || left + out_w > image.width() {
        return Err(FerError::invalid(format!(
            "crop {out_h}x{out_w} at ({top}, {left}) does not fit a {}x{} image",
            image.height(),
            image.width()
        )));
    }
    let w = image.width();
    let src = image.data();
    let mut data = Vec::with_capacity(out_h * out_w * CHANNELS);
    for y in top..top + out_h {
        let start = (y * w + left) * CHANNELS;
        data.extend_from_slice(&src[start..start + out_w * CHANNELS]);
    }
    Ok(ImageTensor::from_raw(out_h, out_w, data))
}

/// Crop at an offset drawn uniformly from every position that fits.
pub fn random_crop(image: &ImageTensor, out_h: usize, out_w: usize, rng: &mut impl Rng) -> Result<ImageTensor> {
    if out_h > image.height() || out_w > image.width() {
        return Err(FerError::invalid(format!(
            "crop {out_h}x{out_w} larger than image {}x{}",
            image.height(),
            image.width()
        )));
    }
    let top = rng.gen_range(0..=image.height() - out_h);
    let left = rng.gen_range(0..=image.width() - out_w);
    crop(image, top, left, out_h, out_w)
}

/// Bilinear resampling with half-pixel centers: output pixel `i` samples the
/// input at `(i + 0.5) · in / out − 0.5`, clamped to the border.
pub fn resize_bilinear(image: &ImageTensor, out_h: usize, out_w: usize) -> Result<ImageTensor> {
    if out_h == 0 || out_w == 0 {
        return Err(FerError::invalid(format!("resize target {out_h}x{out_w} must be positive")));
    }
    let (in_h, in_w) = (image.height(), image.width());
    if (in_h, in_w) == (out_h, out_w) {
        return Ok(image.clone());
    }
    let taps = |out: usize, input: usize| -> Vec<(usize, usize, f32)> {
        let scale = input as f64 / out as f64;
        (0..out)
            .map(|i| {
                let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (input - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(input - 1);
                (i0, i1, (s - i0 as f64) as f32)
            })
            .collect()
    };
    let rows = taps(out_h, in_h);
    let cols = taps(out_w, in_w);
    let src = image.data();
    let at = |y: usize, x: usize, c: usize| src[(y * in_w + x) * CHANNELS + c];

    let mut data = Vec::with_capacity(out_h * out_w * CHANNELS);
    for &(y0, y1, wy) in &rows {
        for &(x0, x1, wx) in &cols {
            for c in 0..CHANNELS {
                let top = at(y0, x0, c) * (1.0 - wx) + at(y0, x1, c) * wx;
                let bottom = at(y1, x0, c) * (1.0 - wx) + at(y1, x1, c) * wx;
                data.push((top * (1.0 - wy) + bottom * wy).clamp(0.0, 1.0));
            }
        }
    }
    Ok(ImageTensor::from_raw(out_h, out_w, data))
}

pub fn adjust_brightness(image: &ImageTensor, delta: f32) -> ImageTensor {
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = (*v + delta).clamp(0.0, 1.0);
    }
    out
}

/// Scale deviations from the image mean by `factor`.
pub fn adjust_contrast(image: &ImageTensor, factor: f32) -> ImageTensor {
    let mean = image.mean() as f32;
    let mut out = image.clone();
    for v in out.data_mut() {
        *v = ((*v - mean) * factor + mean).clamp(0.0, 1.0);
    }
    out
}

/// Fixed photometric jitter used in place of a searched augmentation policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    /// Brightness shift drawn from `[-brightness, brightness]`.
    pub brightness: f32,
    /// Contrast factor drawn from `[contrast.0, contrast.1]`.
    pub contrast: (f32, f32),
    /// Each adjustment is applied independently with this probability.
    pub probability: f64,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter {
            brightness: 0.2,
            contrast: (0.8, 1.25),
            probability: 0.5,
        }
    }
}

/// Concrete jitter decision, so one draw can be applied to every frame of a shot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct JitterDraw {
    pub brightness: Option<f32>,
    pub contrast: Option<f32>,
}

impl Jitter {
    pub(crate) fn draw(&self, rng: &mut impl Rng) -> JitterDraw {
        let brightness = rng
            .gen_bool(self.probability)
            .then(|| rng.gen_range(-self.brightness..=self.brightness));
        let contrast = rng
            .gen_bool(self.probability)
            .then(|| rng.gen_range(self.contrast.0..=self.contrast.1));
        JitterDraw { brightness, contrast }
    }

    pub fn apply(&self, image: &ImageTensor, rng: &mut impl Rng) -> ImageTensor {
        self.draw(rng).apply(image)
    }
}

impl JitterDraw {
    pub(crate) fn apply(&self, image: &ImageTensor) -> ImageTensor {
        let mut out = match self.brightness {
            Some(d) => adjust_brightness(image, d),
            None => image.clone(),
        };
        if let Some(f) = self.contrast {
            out = adjust_contrast(&out, f);
        }
        out
    }
}
