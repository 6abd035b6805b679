use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = FerError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum FerError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing annotation file for video(s): {}", .0.join(", "))]
    MissingAnnotation(Vec<String>),

    #[error("unsupported frame rate {fps}: at least {min} fps required")]
    UnsupportedRate { fps: f64, min: u32 },

    #[error("stream unavailable for video {video_id}: {reason}")]
    StreamUnavailable { video_id: String, reason: String },

    #[error("window starting at {start_sec} s lies beyond the end of the audio ({duration_sec} s)")]
    WindowOutOfRange { start_sec: f64, duration_sec: f64 },

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("integrity error: {0}")]
    Integrity(String),

    #[error("config error: {0}")]
    Config(String),

    /// An internal invariant did not hold; this is a bug rather than bad input.
    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },

    #[error("{path}: {source}")]
    Wav {
        path: PathBuf,
        #[source]
        source: hound::Error,
    },
}

impl FerError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        FerError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(message: impl Into<String>) -> Self {
        FerError::InvalidArgument(message.into())
    }
}
