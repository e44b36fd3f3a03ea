//! Minimal EDF/EDF+ encoder for building test fixtures.

use super::annotations::{HypnogramEvent, ANNOTATION_LABEL};
use super::header::{EdfHeader, SignalHeader, FIXED_HEADER_BYTES, SIGNAL_HEADER_BYTES};
use super::EdfError;

fn field(out: &mut Vec<u8>, value: &str, width: usize, name: &str) -> Result<(), EdfError> {
    if value.len() > width || !value.is_ascii() {
        return Err(EdfError::MalformedField {
            field: name.to_string(),
            value: value.to_string(),
        });
    }
    out.extend_from_slice(value.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - value.len()));
    Ok(())
}

/// Shortest decimal text (at most `width` chars) that parses back to `v`
/// exactly, if one exists.
fn decimal(v: f64, width: usize, name: &str) -> Result<String, EdfError> {
    let plain = format!("{v}");
    if plain.len() <= width {
        return Ok(plain);
    }
    for prec in (0..width).rev() {
        let s = format!("{v:.prec$}");
        if s.len() <= width && s.parse::<f64>().ok() == Some(v) {
            return Ok(s);
        }
    }
    Err(EdfError::MalformedField {
        field: name.to_string(),
        value: plain,
    })
}

pub fn encode_header(h: &EdfHeader) -> Result<Vec<u8>, EdfError> {
    let ns = h.signals.len();
    let mut out = Vec::with_capacity(FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * ns);
    field(&mut out, &h.version, 8, "version")?;
    field(&mut out, &h.patient_info, 80, "patient_info")?;
    field(&mut out, &h.recording_info, 80, "recording_info")?;
    field(&mut out, &h.start_date, 8, "start_date")?;
    field(&mut out, &h.start_time, 8, "start_time")?;
    field(&mut out, &h.header_bytes.to_string(), 8, "header_bytes")?;
    field(&mut out, &h.reserved, 44, "reserved")?;
    field(&mut out, &h.n_data_records.to_string(), 8, "n_data_records")?;
    field(
        &mut out,
        &decimal(h.record_duration_s, 8, "record_duration")?,
        8,
        "record_duration",
    )?;
    field(&mut out, &ns.to_string(), 4, "n_signals")?;
    type Get = fn(&SignalHeader) -> Result<String, EdfError>;
    let columns: [(usize, &str, Get); 10] = [
        (16, "label", |s| Ok(s.label.clone())),
        (80, "transducer", |s| Ok(s.transducer.clone())),
        (8, "physical_dimension", |s| {
            Ok(s.physical_dimension.clone())
        }),
        (8, "physical_min", |s| {
            decimal(s.physical_min, 8, "physical_min")
        }),
        (8, "physical_max", |s| {
            decimal(s.physical_max, 8, "physical_max")
        }),
        (8, "digital_min", |s| Ok(s.digital_min.to_string())),
        (8, "digital_max", |s| Ok(s.digital_max.to_string())),
        (80, "prefiltering", |s| Ok(s.prefiltering.clone())),
        (8, "samples_per_record", |s| {
            Ok(s.samples_per_record.to_string())
        }),
        (32, "reserved", |s| Ok(s.reserved.clone())),
    ];
    for (width, name, get) in columns {
        for s in &h.signals {
            field(&mut out, &get(s)?, width, name)?;
        }
    }
    Ok(out)
}

/// Header followed by interleaved data records. `digital[i]` holds all
/// samples of signal `i` and must be `n_data_records × samples_per_record`
/// long.
pub fn encode_edf(h: &EdfHeader, digital: &[Vec<i16>]) -> Result<Vec<u8>, EdfError> {
    if digital.len() != h.signals.len() {
        return Err(EdfError::InvariantViolation(format!(
            "{} sample arrays for {} signals",
            digital.len(),
            h.signals.len()
        )));
    }
    let records = h.n_data_records.max(0) as usize;
    for (s, d) in h.signals.iter().zip(digital) {
        if d.len() != records * s.samples_per_record {
            return Err(EdfError::InvariantViolation(format!(
                "signal {:?} has {} samples, expected {}",
                s.label,
                d.len(),
                records * s.samples_per_record
            )));
        }
    }
    let mut out = encode_header(h)?;
    for r in 0..records {
        for (s, d) in h.signals.iter().zip(digital) {
            let spr = s.samples_per_record;
            for v in &d[r * spr..(r + 1) * spr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}

/// Header with sensible fixed fields for the given signals.
pub fn fixture_header(
    signals: Vec<SignalHeader>,
    n_data_records: i64,
    record_duration_s: f64,
    edf_plus: bool,
) -> EdfHeader {
    EdfHeader {
        version: "0".into(),
        patient_info: "X X X X".into(),
        recording_info: "Startdate 01-JAN-2000 X X X".into(),
        start_date: "01.01.00".into(),
        start_time: "00.00.00".into(),
        header_bytes: FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * signals.len(),
        reserved: if edf_plus {
            "EDF+C".into()
        } else {
            String::new()
        },
        n_data_records,
        record_duration_s,
        signals,
    }
}

pub fn fixture_signal(
    label: &str,
    samples_per_record: usize,
    physical: (f64, f64),
    digital: (i32, i32),
) -> SignalHeader {
    SignalHeader {
        label: label.into(),
        transducer: String::new(),
        physical_dimension: "uV".into(),
        physical_min: physical.0,
        physical_max: physical.1,
        digital_min: digital.0,
        digital_max: digital.1,
        prefiltering: String::new(),
        samples_per_record,
        reserved: String::new(),
    }
}

/// Nearest digital code for a physical value, clamped to the digital range.
pub fn to_digital(s: &SignalHeader, physical: f64) -> i16 {
    let d = (physical - s.physical_min) / s.gain() + f64::from(s.digital_min);
    d.round()
        .clamp(f64::from(s.digital_min), f64::from(s.digital_max)) as i16
}

/// Encodes events as TAL bytes, preceded by the record's time-keeping TAL.
pub fn encode_tals(events: &[HypnogramEvent]) -> Vec<u8> {
    let mut out = b"+0\x14\x14\x00".to_vec();
    for ev in events {
        out.extend_from_slice(
            format!(
                "+{}\x15{}\x14{}\x14\x00",
                ev.onset_s, ev.duration_s, ev.stage_text
            )
            .as_bytes(),
        );
    }
    out
}

/// Single-record EDF+ file whose only signal carries the given events.
pub fn encode_hypnogram(events: &[HypnogramEvent]) -> Result<Vec<u8>, EdfError> {
    let mut tal = encode_tals(events);
    if tal.len() % 2 == 1 {
        tal.push(0);
    }
    let spr = tal.len() / 2;
    let signal = SignalHeader {
        label: ANNOTATION_LABEL.into(),
        transducer: String::new(),
        physical_dimension: String::new(),
        physical_min: -32768.0,
        physical_max: 32767.0,
        digital_min: -32768,
        digital_max: 32767,
        prefiltering: String::new(),
        samples_per_record: spr,
        reserved: String::new(),
    };
    let header = fixture_header(vec![signal], 1, 0.0, true);
    let words: Vec<i16> = tal
        .chunks_exact(2)
        .map(|w| i16::from_le_bytes([w[0], w[1]]))
        .collect();
    encode_edf(&header, &[words])
}
