//! EDF+ Timestamped Annotation Lists.
//!
//! A TAL is `±onset [0x15 duration] 0x14 (text 0x14)* 0x00`; unused bytes
//! at the end of a record are zero.

use super::header::parse_edf_header;
use super::signal::read_raw_bytes;
use super::EdfError;

pub const ANNOTATION_LABEL: &str = "EDF Annotations";

const DURATION_MARK: u8 = 0x15;
const TEXT_END: u8 = 0x14;
const TAL_END: u8 = 0x00;

#[derive(Debug, Clone, PartialEq)]
pub struct HypnogramEvent {
    pub onset_s: f64,
    pub duration_s: f64,
    pub stage_text: String,
}

/// One parsed TAL: timestamp plus every annotation text (possibly empty).
#[derive(Debug, Clone, PartialEq)]
pub struct Tal {
    pub onset_s: f64,
    pub duration_s: Option<f64>,
    pub texts: Vec<String>,
}

fn parse_time(raw: &[u8], what: &str) -> Result<f64, EdfError> {
    let s = std::str::from_utf8(raw)
        .map_err(|_| EdfError::MalformedTal(format!("{what} is not ASCII")))?;
    s.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| EdfError::MalformedTal(format!("bad {what} {s:?}")))
}

/// Splits one record's annotation bytes into TALs.
pub fn parse_tals(bytes: &[u8]) -> Result<Vec<Tal>, EdfError> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        if bytes[pos] == TAL_END {
            pos += 1;
            continue;
        }
        if bytes[pos] != b'+' && bytes[pos] != b'-' {
            return Err(EdfError::MalformedTal(format!(
                "TAL at byte {pos} does not start with a signed onset"
            )));
        }
        let stamp_end = bytes[pos..]
            .iter()
            .position(|&b| b == TEXT_END)
            .map(|p| pos + p)
            .ok_or_else(|| EdfError::MalformedTal("timestamp not terminated by 0x14".into()))?;
        let stamp = &bytes[pos..stamp_end];
        let (onset_raw, duration_raw) = match stamp.iter().position(|&b| b == DURATION_MARK) {
            Some(i) => (&stamp[..i], Some(&stamp[i + 1..])),
            None => (stamp, None),
        };
        let onset_s = parse_time(onset_raw, "onset")?;
        let duration_s = match duration_raw {
            Some(d) => {
                let v = parse_time(d, "duration")?;
                if v < 0.0 {
                    return Err(EdfError::MalformedTal(format!("negative duration {v}")));
                }
                Some(v)
            }
            None => None,
        };
        pos = stamp_end + 1;
        let mut texts = Vec::new();
        loop {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == TEXT_END || b == TAL_END)
                .map(|p| pos + p)
                .ok_or_else(|| EdfError::MalformedTal("annotation text not terminated".into()))?;
            if bytes[end] == TAL_END {
                if end != pos {
                    return Err(EdfError::MalformedTal(
                        "annotation text ended by 0x00 instead of 0x14".into(),
                    ));
                }
                pos = end + 1;
                break;
            }
            texts.push(String::from_utf8_lossy(&bytes[pos..end]).into_owned());
            pos = end + 1;
            if pos >= bytes.len() {
                return Err(EdfError::MalformedTal("TAL not terminated by 0x00".into()));
            }
            if bytes[pos] == TAL_END {
                pos += 1;
                break;
            }
        }
        out.push(Tal {
            onset_s,
            duration_s,
            texts,
        });
    }
    Ok(out)
}

/// Non-empty annotations as events, in file order. Onsets must not
/// decrease and events must not overlap.
pub fn events_from_tals(tals: &[Tal]) -> Result<Vec<HypnogramEvent>, EdfError> {
    let mut events: Vec<HypnogramEvent> = Vec::new();
    for tal in tals {
        for text in tal.texts.iter().filter(|t| !t.is_empty()) {
            let ev = HypnogramEvent {
                onset_s: tal.onset_s,
                duration_s: tal.duration_s.unwrap_or(0.0),
                stage_text: text.clone(),
            };
            if ev.onset_s < 0.0 {
                return Err(EdfError::MalformedTal(format!(
                    "negative onset {}",
                    ev.onset_s
                )));
            }
            if let Some(prev) = events.last() {
                if ev.onset_s < prev.onset_s {
                    return Err(EdfError::NonMonotonicOnsets {
                        previous: prev.onset_s,
                        next: ev.onset_s,
                    });
                }
                if ev.onset_s < prev.onset_s + prev.duration_s - 1e-6 {
                    return Err(EdfError::OverlappingEvents {
                        previous: prev.onset_s,
                        next: ev.onset_s,
                    });
                }
            }
            events.push(ev);
        }
    }
    Ok(events)
}

/// Reads every TAL of an EDF+ annotation file.
pub fn parse_hypnogram(bytes: &[u8]) -> Result<Vec<HypnogramEvent>, EdfError> {
    let header = parse_edf_header(bytes)?;
    let idx = header
        .signal_index(ANNOTATION_LABEL)
        .ok_or_else(|| EdfError::MissingChannel(ANNOTATION_LABEL.into()))?;
    let mut tals = Vec::new();
    for record in read_raw_bytes(bytes, &header, idx)? {
        tals.extend(parse_tals(&record)?);
    }
    events_from_tals(&tals)
}
