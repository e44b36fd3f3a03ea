use std::collections::BTreeMap;
use std::path::Path;

use super::annotations::{parse_hypnogram, HypnogramEvent};
use super::header::parse_edf_header;
use super::signal::{read_signal, SignalTrace};
use super::EdfError;

/// Rate every selected channel must have.
pub const EXPECTED_SAMPLE_RATE_HZ: f64 = 100.0;

/// One subject-night: selected channels plus scored stage events.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub subject_key: String,
    pub night: u32,
    pub signals: BTreeMap<String, SignalTrace>,
    pub events: Vec<HypnogramEvent>,
}

/// Sleep-EDF file stems look like `SC4ssN..`: the first five characters
/// name the subject, the sixth is the night.
pub fn subject_and_night(file_name: &str) -> Result<(String, u32), EdfError> {
    let stem = Path::new(file_name)
        .file_name()
        .and_then(|s| s.to_str())
        .unwrap_or(file_name);
    let stem = stem.split('-').next().unwrap_or(stem);
    let chars: Vec<char> = stem.chars().collect();
    if chars.len() < 6 || !chars[..6].iter().all(char::is_ascii_alphanumeric) {
        return Err(EdfError::BadFileName(file_name.to_string()));
    }
    let night = chars[5]
        .to_digit(10)
        .ok_or_else(|| EdfError::BadFileName(file_name.to_string()))?;
    Ok((chars[..5].iter().collect(), night))
}

/// Builds a record from in-memory file contents. `psg_name` supplies the
/// subject key and night.
pub fn load_record_bytes(
    psg_name: &str,
    psg: &[u8],
    hypnogram: &[u8],
    wanted_channels: &[String],
) -> Result<RawRecord, EdfError> {
    let (subject_key, night) = subject_and_night(psg_name)?;
    let header = parse_edf_header(psg)?;
    let mut signals = BTreeMap::new();
    for label in wanted_channels {
        let idx = header
            .signal_index(label)
            .ok_or_else(|| EdfError::MissingChannel(label.clone()))?;
        let trace = read_signal(psg, &header, idx)?;
        if (trace.sample_rate_hz - EXPECTED_SAMPLE_RATE_HZ).abs() > 1e-9 {
            return Err(EdfError::UnsupportedSampleRate {
                label: label.clone(),
                rate_hz: trace.sample_rate_hz,
            });
        }
        signals.insert(label.clone(), trace);
    }
    let durations: Vec<f64> = signals.values().map(SignalTrace::duration_s).collect();
    if let (Some(lo), Some(hi)) = (
        durations.iter().copied().reduce(f64::min),
        durations.iter().copied().reduce(f64::max),
    ) {
        if hi - lo > header.record_duration_s {
            return Err(EdfError::DurationMismatch {
                shortest: lo,
                longest: hi,
            });
        }
    }
    let events = parse_hypnogram(hypnogram)?;
    Ok(RawRecord {
        subject_key,
        night,
        signals,
        events,
    })
}

pub fn load_record(
    psg_path: &Path,
    hyp_path: &Path,
    wanted_channels: &[String],
) -> Result<RawRecord, EdfError> {
    let psg = std::fs::read(psg_path)?;
    let hyp = std::fs::read(hyp_path)?;
    let name = psg_path
        .file_name()
        .and_then(|s| s.to_str())
        .ok_or_else(|| EdfError::BadFileName(psg_path.display().to_string()))?;
    load_record_bytes(name, &psg, &hyp, wanted_channels)
}
