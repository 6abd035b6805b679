//! Linear classification head and its checkpoint format: magic `FERH`,
//! `u32` feature dimension `D`, `8·D` weights (row-major, one row per
//! class), 8 biases; all little-endian `f32`.

use std::fs;
use std::path::Path;

use rand::Rng;

use crate::dataset::NUM_CLASSES;
use crate::rng;
use crate::{FerError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FERH";

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    dim: usize,
    /// `NUM_CLASSES` rows of `dim` weights followed by `NUM_CLASSES` biases.
    params: Vec<f64>,
}

/// Gradient of a loss with respect to every head parameter, in the same
/// layout as [`LinearHead::params`].
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradient(pub Vec<f64>);

impl LinearHead {
    pub fn zeros(dim: usize) -> Self {
        LinearHead {
            dim,
            params: vec![0.0; NUM_CLASSES * (dim + 1)],
        }
    }

    /// Weights and biases drawn from `U(−0.01, 0.01)`.
    pub fn init(dim: usize, seed: u64) -> Self {
        let mut rng = rng::seeded(seed);
        LinearHead {
            dim,
            params: (0..NUM_CLASSES * (dim + 1)).map(|_| rng.gen_range(-0.01..0.01)).collect(),
        }
    }

    pub fn from_parts(weights: Vec<f64>, bias: [f64; NUM_CLASSES]) -> Result<Self> {
        if weights.len() % NUM_CLASSES != 0 {
            return Err(FerError::invalid(format!("{} weights is not a multiple of 8", weights.len())));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(FerError::invalid("head parameters must be finite"));
        }
        let dim = weights.len() / NUM_CLASSES;
        let mut params = weights;
        params.extend_from_slice(&bias);
        Ok(LinearHead { dim, params })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn weight(&self, class: usize, d: usize) -> f64 {
        self.params[class * self.dim + d]
    }

    pub fn bias(&self, class: usize) -> f64 {
        self.params[NUM_CLASSES * self.dim + class]
    }

    /// `W · features + b`.
    pub fn logits(&self, features: &[f64]) -> Result<[f64; NUM_CLASSES]> {
        if features.len() != self.dim {
            return Err(FerError::invalid(format!(
                "feature length {} does not match head dimension {}",
                features.len(),
                self.dim
            )));
        }
        Ok(std::array::from_fn(|c| {
            let row = &self.params[c * self.dim..(c + 1) * self.dim];
            row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + self.bias(c)
        }))
    }

    /// Accumulate `scale · ∂L/∂params` for one sample whose logit gradient
    /// is `dlogits`.
    pub(crate) fn accumulate_gradient(&self, grad: &mut [f64], features: &[f64], dlogits: &[f64; NUM_CLASSES], scale: f64) {
        for (c, &g) in dlogits.iter().enumerate() {
            let g = g * scale;
            let row = &mut grad[c * self.dim..(c + 1) * self.dim];
            for (slot, f) in row.iter_mut().zip(features) {
                *slot += g * f;
            }
            grad[NUM_CLASSES * self.dim + c] += g;
        }
    }

    /// Round every parameter to `f32`, as stored in a checkpoint.
    pub fn quantized(&self) -> LinearHead {
        LinearHead {
            dim: self.dim,
            params: self.params.iter().map(|&p| p as f32 as f64).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = Vec::with_capacity(8 + 4 * self.params.len());
        bytes.extend_from_slice(CHECKPOINT_MAGIC);
        bytes.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for &p in &self.params {
            bytes.extend_from_slice(&(p as f32).to_le_bytes());
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(FerError::Integrity("not a FERH checkpoint".into()));
        }
        let dim = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes")) as usize;
        let expected = 8 + 4 * NUM_CLASSES * (dim + 1);
        if bytes.len() != expected {
            return Err(FerError::Integrity(format!(
                "checkpoint has {} bytes, expected {expected} for D={dim}",
                bytes.len()
            )));
        }
        let params: Vec<f64> = bytes[8..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
            .collect();
        if params.iter().any(|p| !p.is_finite()) {
            return Err(FerError::Integrity("checkpoint holds non-finite parameters".into()));
        }
        Ok(LinearHead { dim, params })
    }
}

pub fn write_checkpoint(path: &Path, head: &LinearHead) -> Result<()> {
    fs::write(path, head.to_bytes()).map_err(|e| FerError::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<LinearHead> {
    LinearHead::from_bytes(&fs::read(path).map_err(|e| FerError::io(path, e))?)
}
