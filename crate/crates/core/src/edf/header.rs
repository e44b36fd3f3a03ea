//! Fixed 256-byte header plus 256 bytes per signal, all ASCII.

use super::EdfError;

pub const FIXED_HEADER_BYTES: usize = 256;
pub const SIGNAL_HEADER_BYTES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct SignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalHeader {
    pub fn sample_rate_hz(&self, record_duration_s: f64) -> f64 {
        self.samples_per_record as f64 / record_duration_s
    }

    /// Digital-to-physical gain, `(pmax - pmin) / (dmax - dmin)`.
    pub fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        let d = f64::from(digital) - f64::from(self.digital_min);
        d * (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
            + self.physical_min
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient_info: String,
    pub recording_info: String,
    /// `dd.mm.yy`
    pub start_date: String,
    /// `hh.mm.ss`
    pub start_time: String,
    pub header_bytes: usize,
    /// `EDF+C` / `EDF+D` for EDF+ files, blank for plain EDF.
    pub reserved: String,
    pub n_data_records: i64,
    pub record_duration_s: f64,
    pub signals: Vec<SignalHeader>,
}

impl EdfHeader {
    pub fn n_signals(&self) -> usize {
        self.signals.len()
    }

    /// Bytes in one data record (2 per sample).
    pub fn record_bytes(&self) -> usize {
        self.signals.iter().map(|s| s.samples_per_record * 2).sum()
    }

    pub fn signal_index(&self, label: &str) -> Option<usize> {
        self.signals.iter().position(|s| s.label == label)
    }

    pub fn is_edf_plus(&self) -> bool {
        self.reserved.starts_with("EDF+")
    }

    pub fn validate(&self) -> Result<(), EdfError> {
        let expected = FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * self.signals.len();
        if self.header_bytes != expected {
            return Err(EdfError::InvariantViolation(format!(
                "header declares {} bytes but {} signals need {expected}",
                self.header_bytes,
                self.signals.len()
            )));
        }
        if self.n_data_records < 0 {
            return Err(EdfError::InvariantViolation(format!(
                "number of data records is {} (unfinished recording)",
                self.n_data_records
            )));
        }
        if self.record_duration_s.is_nan() || self.record_duration_s < 0.0 {
            return Err(EdfError::InvariantViolation(format!(
                "record duration {} is negative",
                self.record_duration_s
            )));
        }
        for s in &self.signals {
            if s.digital_min >= s.digital_max {
                return Err(EdfError::InvariantViolation(format!(
                    "signal {:?}: digital_min {} >= digital_max {}",
                    s.label, s.digital_min, s.digital_max
                )));
            }
            if s.physical_min == s.physical_max {
                return Err(EdfError::InvariantViolation(format!(
                    "signal {:?}: physical_min == physical_max == {}",
                    s.label, s.physical_min
                )));
            }
        }
        Ok(())
    }
}

/// Text field with non-printable / non-ASCII bytes replaced by `?` and
/// trailing blanks removed.
fn text(bytes: &[u8]) -> String {
    let s: String = bytes
        .iter()
        .map(|&b| {
            if (0x20..0x7f).contains(&b) {
                b as char
            } else {
                '?'
            }
        })
        .collect();
    s.trim_end().to_string()
}

fn number<T: std::str::FromStr>(bytes: &[u8], field: &str) -> Result<T, EdfError> {
    let s = text(bytes);
    let trimmed = s.trim();
    trimmed
        .trim_start_matches('+')
        .parse::<T>()
        .map_err(|_| EdfError::MalformedField {
            field: field.to_string(),
            value: trimmed.to_string(),
        })
}

struct Fields<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Fields<'a> {
    fn next(&mut self, width: usize) -> &'a [u8] {
        let out = &self.bytes[self.pos..self.pos + width];
        self.pos += width;
        out
    }

    fn many(&mut self, width: usize, count: usize) -> Vec<&'a [u8]> {
        (0..count).map(|_| self.next(width)).collect()
    }
}

pub fn parse_edf_header(bytes: &[u8]) -> Result<EdfHeader, EdfError> {
    if bytes.len() < FIXED_HEADER_BYTES {
        return Err(EdfError::TruncatedHeader {
            needed: FIXED_HEADER_BYTES,
            got: bytes.len(),
        });
    }
    let mut f = Fields { bytes, pos: 0 };
    let version = text(f.next(8));
    let patient_info = text(f.next(80));
    let recording_info = text(f.next(80));
    let start_date = text(f.next(8));
    let start_time = text(f.next(8));
    let header_bytes: usize = number(f.next(8), "header_bytes")?;
    let reserved = text(f.next(44));
    let n_data_records: i64 = number(f.next(8), "n_data_records")?;
    let record_duration_s: f64 = number(f.next(8), "record_duration")?;
    let n_signals: usize = number(f.next(4), "n_signals")?;

    let needed = FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * n_signals;
    if bytes.len() < needed || bytes.len() < header_bytes {
        return Err(EdfError::TruncatedHeader {
            needed: needed.max(header_bytes),
            got: bytes.len(),
        });
    }
    let labels = f.many(16, n_signals);
    let transducers = f.many(80, n_signals);
    let dims = f.many(8, n_signals);
    let pmins = f.many(8, n_signals);
    let pmaxs = f.many(8, n_signals);
    let dmins = f.many(8, n_signals);
    let dmaxs = f.many(8, n_signals);
    let prefilters = f.many(80, n_signals);
    let sprs = f.many(8, n_signals);
    let reserveds = f.many(32, n_signals);

    let mut signals = Vec::with_capacity(n_signals);
    for i in 0..n_signals {
        signals.push(SignalHeader {
            label: text(labels[i]),
            transducer: text(transducers[i]),
            physical_dimension: text(dims[i]),
            physical_min: number(pmins[i], "physical_min")?,
            physical_max: number(pmaxs[i], "physical_max")?,
            digital_min: number(dmins[i], "digital_min")?,
            digital_max: number(dmaxs[i], "digital_max")?,
            prefiltering: text(prefilters[i]),
            samples_per_record: number(sprs[i], "samples_per_record")?,
            reserved: text(reserveds[i]),
        });
    }
    let header = EdfHeader {
        version,
        patient_info,
        recording_info,
        start_date,
        start_time,
        header_bytes,
        reserved,
        n_data_records,
        record_duration_s,
        signals,
    };
    header.validate()?;
    Ok(header)
}
