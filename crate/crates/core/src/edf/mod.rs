//! EDF / EDF+ polysomnography files and EDF+ hypnogram annotations.

pub mod annotations;
pub mod header;
pub mod record;
pub mod signal;
pub mod writer;

pub use annotations::{parse_hypnogram, parse_tals, HypnogramEvent, Tal, ANNOTATION_LABEL};
pub use header::{parse_edf_header, EdfHeader, SignalHeader};
pub use record::{
    load_record, load_record_bytes, subject_and_night, RawRecord, EXPECTED_SAMPLE_RATE_HZ,
};
pub use signal::{read_digital, read_signal, SignalTrace};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EdfError {
    #[error("header truncated: need {needed} bytes, got {got}")]
    TruncatedHeader { needed: usize, got: usize },
    #[error("malformed header field {field}: {value:?}")]
    MalformedField { field: String, value: String },
    #[error("header invariant violated: {0}")]
    InvariantViolation(String),
    #[error("data truncated: need {needed} bytes, got {got}")]
    TruncatedData { needed: usize, got: usize },
    #[error("no signal with index {0}")]
    NoSuchSignal(usize),
    #[error("malformed annotation list: {0}")]
    MalformedTal(String),
    #[error("annotation onsets go backwards ({previous} s then {next} s)")]
    NonMonotonicOnsets { previous: f64, next: f64 },
    #[error("annotation at {next} s overlaps the event starting at {previous} s")]
    OverlappingEvents { previous: f64, next: f64 },
    #[error("channel {0:?} not found")]
    MissingChannel(String),
    #[error("channel {label:?} is sampled at {rate_hz} Hz, expected 100 Hz")]
    UnsupportedSampleRate { label: String, rate_hz: f64 },
    #[error("channel durations disagree: {shortest} s vs {longest} s")]
    DurationMismatch { shortest: f64, longest: f64 },
    #[error("file name {0:?} does not follow the SC4ssN / ST7ssN pattern")]
    BadFileName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
