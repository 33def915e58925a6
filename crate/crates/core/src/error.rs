use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid analysis config: {0}")]
    InvalidConfig(String),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("length mismatch in {what}: expected {expected}, got {actual}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("filter count {filters} does not match frame count {frames}")]
    FilterCount { filters: usize, frames: usize },

    #[error("tap length {taps} outside 1..={fft_len}")]
    TapLength { taps: usize, fft_len: usize },

    #[error("minimum-phase lifter needs an even length >= 4, got {0}")]
    OddLifterLength(usize),

    #[error("invalid sub-band gate: {0}")]
    InvalidGate(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("input is entirely silent")]
    AllSilent,

    #[error("unsupported wav: {0}")]
    UnsupportedWav(String),

    #[error("malformed wav: {0}")]
    MalformedWav(String),

    #[error("model file format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt file: {0}")]
    Corrupt(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("{path}: {source}")]
    Path {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn at_path(path: impl Into<PathBuf>) -> impl FnOnce(io::Error) -> Error {
        let path = path.into();
        move |source| Error::Path { path, source }
    }
}
