use std::path::Path;

use crate::{FerError, Result};

pub const CHANNELS: usize = 3;

/// Row-major `H × W × 3` image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ImageTensor {
    pub fn new(height: usize, width: usize, data: Vec<f32>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(FerError::invalid(format!("image dimensions {height}x{width} must be positive")));
        }
        if data.len() != height * width * CHANNELS {
            return Err(FerError::invalid(format!(
                "{} values for a {height}x{width}x{CHANNELS} image",
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(FerError::invalid(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(ImageTensor { height, width, data })
    }

    /// Trusted constructor for kernels whose outputs are in range by construction.
    pub(crate) fn from_raw(height: usize, width: usize, data: Vec<f32>) -> Self {
        debug_assert_eq!(data.len(), height * width * CHANNELS);
        ImageTensor { height, width, data }
    }

    pub fn filled(height: usize, width: usize, value: f32) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * CHANNELS])
    }

    pub fn from_fn(height: usize, width: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width * CHANNELS);
        for y in 0..height {
            for x in 0..width {
                for c in 0..CHANNELS {
                    data.push(f(y, x, c));
                }
            }
        }
        Self::new(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.height, self.width, CHANNELS)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * CHANNELS + c]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().map(|&v| v as f64).sum::<f64>() / self.data.len() as f64
    }

    pub fn from_rgb8(img: &::image::RgbImage) -> Self {
        let (w, h) = img.dimensions();
        let data = img.as_raw().iter().map(|&b| b as f32 / 255.0).collect();
        Self::from_raw(h as usize, w as usize, data)
    }

    pub fn to_rgb8(&self) -> ::image::RgbImage {
        let bytes = self.data.iter().map(|&v| (v * 255.0).round().clamp(0.0, 255.0) as u8).collect();
        ::image::RgbImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = ::image::open(path).map_err(|source| FerError::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8()
            .save_with_format(path, ::image::ImageFormat::Png)
            .map_err(|source| FerError::Image {
                path: path.to_path_buf(),
                source,
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_range_and_shape() {
        assert!(ImageTensor::new(2, 2, vec![0.5; 12]).is_ok());
        assert!(ImageTensor::new(2, 2, vec![0.5; 11]).is_err());
        assert!(ImageTensor::new(2, 2, vec![1.5; 12]).is_err());
        assert!(ImageTensor::new(0, 2, vec![]).is_err());
    }

    #[test]
    fn rgb8_conversion_is_exact_on_byte_values() {
        let img = ImageTensor::from_fn(3, 4, |y, x, c| ((y * 40 + x * 10 + c) as f32) / 255.0).unwrap();
        assert_eq!(ImageTensor::from_rgb8(&img.to_rgb8()), img);
    }
}
