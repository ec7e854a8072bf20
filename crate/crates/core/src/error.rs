use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("clip too short: {len} samples, need at least {needed}")]
    TooShort { len: usize, needed: usize },

    #[error("invalid audio: {0}")]
    InvalidAudio(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: segments on lines {first} and {second} overlap", path.display())]
    OverlappingSegments {
        path: PathBuf,
        first: usize,
        second: usize,
    },

    #[error("{}:{line}: class id {class_id} out of range for {num_classes} classes", path.display())]
    ClassOutOfRange {
        path: PathBuf,
        line: usize,
        class_id: usize,
        num_classes: usize,
    },

    #[error("insufficient frames: {frames} frames cannot form {clusters} clusters")]
    InsufficientFrames { frames: usize, clusters: usize },

    #[error("pairing mismatch: {0}")]
    Pairing(String),

    #[error("no frames accumulated")]
    NoData,

    #[error("unsupported model format version {0}")]
    UnsupportedVersion(String),

    #[error("malformed model file: {0}")]
    MalformedModel(String),

    #[error("unsupported wav file {}: {message}", path.display())]
    UnsupportedWav { path: PathBuf, message: String },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("{0}")]
    Validation(String),

    #[error("I/O error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True when the failure came from the filesystem rather than from the
    /// content of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}
