use super::header::EdfHeader;
use super::EdfError;

/// One channel converted to physical units.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    pub label: String,
    pub physical_dimension: String,
    pub sample_rate_hz: f64,
    pub samples: Vec<f32>,
}

impl SignalTrace {
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

fn check_data(bytes: &[u8], header: &EdfHeader, signal_index: usize) -> Result<(), EdfError> {
    if signal_index >= header.n_signals() {
        return Err(EdfError::NoSuchSignal(signal_index));
    }
    let needed = header.header_bytes + header.n_data_records as usize * header.record_bytes();
    if bytes.len() < needed {
        return Err(EdfError::TruncatedData {
            needed,
            got: bytes.len(),
        });
    }
    Ok(())
}

/// Byte ranges holding `signal_index` in each data record.
fn signal_chunks<'a>(
    bytes: &'a [u8],
    header: &'a EdfHeader,
    signal_index: usize,
) -> impl Iterator<Item = &'a [u8]> + 'a {
    let offset: usize = header.signals[..signal_index]
        .iter()
        .map(|s| s.samples_per_record * 2)
        .sum();
    let len = header.signals[signal_index].samples_per_record * 2;
    let record = header.record_bytes();
    (0..header.n_data_records as usize).map(move |r| {
        let start = header.header_bytes + r * record + offset;
        &bytes[start..start + len]
    })
}

/// Raw little-endian sample words of one signal, record after record.
pub fn read_digital(
    bytes: &[u8],
    header: &EdfHeader,
    signal_index: usize,
) -> Result<Vec<i16>, EdfError> {
    check_data(bytes, header, signal_index)?;
    Ok(signal_chunks(bytes, header, signal_index)
        .flat_map(|chunk| {
            chunk
                .chunks_exact(2)
                .map(|w| i16::from_le_bytes([w[0], w[1]]))
        })
        .collect())
}

/// Raw bytes of one signal (used for annotation channels).
pub fn read_raw_bytes(
    bytes: &[u8],
    header: &EdfHeader,
    signal_index: usize,
) -> Result<Vec<Vec<u8>>, EdfError> {
    check_data(bytes, header, signal_index)?;
    Ok(signal_chunks(bytes, header, signal_index)
        .map(<[u8]>::to_vec)
        .collect())
}

/// Affine digital-to-physical conversion of one signal.
pub fn read_signal(
    bytes: &[u8],
    header: &EdfHeader,
    signal_index: usize,
) -> Result<SignalTrace, EdfError> {
    let digital = read_digital(bytes, header, signal_index)?;
    let sh = &header.signals[signal_index];
    Ok(SignalTrace {
        label: sh.label.clone(),
        physical_dimension: sh.physical_dimension.clone(),
        sample_rate_hz: sh.sample_rate_hz(header.record_duration_s),
        samples: digital.iter().map(|&d| sh.to_physical(d) as f32).collect(),
    })
}
