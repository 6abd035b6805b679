//! Binary spectrogram files: magic `MELS`, `u32` rows, `u32` columns, then
//! `rows · columns` little-endian `f32` values in row-major order.

use std::fs;
use std::path::Path;

use super::{Matrix, SpectrogramGrid};
use crate::{FerError, Result};

pub const SPECTROGRAM_MAGIC: &[u8; 4] = b"MELS";

pub fn write_spectrogram(path: &Path, grid: &SpectrogramGrid) -> Result<()> {
    let values = &grid.values;
    let mut bytes = Vec::with_capacity(12 + 4 * values.data.len());
    bytes.extend_from_slice(SPECTROGRAM_MAGIC);
    bytes.extend_from_slice(&(values.rows as u32).to_le_bytes());
    bytes.extend_from_slice(&(values.cols as u32).to_le_bytes());
    for &v in &values.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| FerError::io(path, e))
}

pub fn read_spectrogram(path: &Path) -> Result<SpectrogramGrid> {
    let bytes = fs::read(path).map_err(|e| FerError::io(path, e))?;
    let bad = |msg: &str| FerError::Integrity(format!("{}: {msg}", path.display()));
    if bytes.len() < 12 || &bytes[..4] != SPECTROGRAM_MAGIC {
        return Err(bad("not a MELS spectrogram file"));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes")) as usize;
    let (rows, cols) = (word(4), word(8));
    if bytes.len() != 12 + 4 * rows * cols {
        return Err(bad("payload length does not match the header"));
    }
    let data = bytes[12..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Ok(SpectrogramGrid {
        values: Matrix { rows, cols, data },
        config: None,
        origin: None,
    })
}
