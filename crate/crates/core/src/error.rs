use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the filtering pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },

    #[error("{file}: expected {expected} bytes, found {found}")]
    SizeMismatch {
        file: PathBuf,
        expected: u64,
        found: u64,
    },

    #[error("label {label} at trial {trial} outside [0, {n_classes})")]
    LabelRange {
        trial: usize,
        label: i32,
        n_classes: usize,
    },

    #[error("invalid recording: {0}")]
    InvalidRecording(String),

    #[error("invalid synthetic config: {0}")]
    InvalidConfig(String),

    #[error("invalid filter spec: {0}")]
    InvalidSpec(String),

    #[error("non-finite input sample at index {0}")]
    NonFiniteInput(usize),

    #[error("sampling-rate ratio {from_hz}/{to_hz} is not a positive integer")]
    NonIntegerFactor { from_hz: f64, to_hz: f64 },

    #[error("no trial is long enough for a {window_samples}-sample window")]
    EmptyResult { window_samples: usize },

    #[error("band [{lo}, {hi}) Hz contains no FFT bin (N = {n_fft}, fs = {fs_hz} Hz)")]
    EmptyBand {
        lo: f64,
        hi: f64,
        n_fft: usize,
        fs_hz: f64,
    },

    #[error("band [{lo}, {hi}) Hz outside [0, {nyquist}] Hz")]
    InvalidBand { lo: f64, hi: f64, nyquist: f64 },

    #[error("theta energy vanishes for epoch {epoch}")]
    DegenerateSpectrum { epoch: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("k grid is empty")]
    GridEmpty,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    #[error("training data contains fewer than two classes")]
    DegenerateLabels,

    #[error("loss became non-finite at epoch {epoch}; learning rate too large?")]
    NonFiniteLoss { epoch: usize },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("exact sign-flip test supports at most 20 paired values, got {0}")]
    TooManySubjects(usize),

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(path: impl Into<PathBuf>, source: serde_json::Error) -> Self {
        Error::Json {
            path: path.into(),
            source,
        }
    }
}
