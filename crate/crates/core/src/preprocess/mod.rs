//! From raw records to model-ready 30-second epoch tensors.

pub mod cache;
pub mod dataset;
pub mod filter;
pub mod labels;

pub use cache::{
    cache_checksum, decode_cache, encode_cache, read_cache, write_cache, CACHE_MAGIC, CACHE_VERSION,
};
pub use dataset::{
    build_epoch_dataset, preprocess_record, EpochDataset, PreprocessOptions, RecordSummary,
    EPOCH_SAMPLES, EPOCH_SECONDS, SAMPLE_RATE_HZ,
};
pub use filter::{design_bandpass, filtfilt, filtfilt_f32, FilterSpec, Section};
pub use labels::{
    expand_epoch_labels, map_stage_label, trim_wake, EpochLabel, StageClass, TRIM_MARGIN_EPOCHS,
};

use thiserror::Error;

use crate::edf::EdfError;

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("invalid band {low_hz}-{high_hz} Hz at {sample_rate_hz} Hz sampling")]
    InvalidBand {
        low_hz: f64,
        high_hz: f64,
        sample_rate_hz: f64,
    },
    #[error("signal of {len} samples is too short to filter (need at least {min})")]
    SignalTooShort { len: usize, min: usize },
    #[error("unknown stage label {0:?}")]
    UnknownLabel(String),
    #[error("record contains no sleep epochs")]
    AllWake,
    #[error("epoch alignment: {0}")]
    EpochAlignmentError(String),
    #[error("channel {0:?} not found in record")]
    MissingChannel(String),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("not a dataset cache (bad magic)")]
    BadMagic,
    #[error("cache version {found}, expected {expected}")]
    VersionMismatch { expected: u8, found: u8 },
    #[error("cache checksum mismatch")]
    ChecksumMismatch,
    #[error("corrupt cache: {0}")]
    CorruptCache(String),
    #[error(transparent)]
    Edf(#[from] EdfError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
