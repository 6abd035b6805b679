//! Three-stream facial expression recognition pipeline.
//!
//! The crate turns a video expression corpus (pre-extracted face crops,
//! per-frame expression labels, per-video audio) into three independently
//! trained classifiers and fuses their scores at inference time:
//!
//! * **visual**: one face crop per frame, trained with half-mix jittering and
//!   soft cross-entropy;
//! * **temporal**: 16-frame shots sampled from every second of video;
//! * **audio**: log-mel spectrogram images of 2-second windows.
//!
//! Backbones are fixed patch-mean featurizers with a trainable linear head, so
//! the full training, fusion and evaluation math runs at desk scale.

pub mod audio;
pub mod augment;
pub mod config;
pub mod dataset;
mod error;
pub mod fusion;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod synth;

pub use error::{FerError, Result};
