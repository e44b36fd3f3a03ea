//! Epoch dataset assembly.

use std::collections::BTreeSet;

use serde::Serialize;

use super::filter::{design_bandpass, filtfilt_f32, FilterSpec};
use super::labels::{expand_epoch_labels, trim_wake, StageClass};
use super::PreprocessError;
use crate::edf::RawRecord;
use crate::nn::Tensor3;

pub const EPOCH_SECONDS: f64 = 30.0;
pub const EPOCH_SAMPLES: usize = 3000;
pub const SAMPLE_RATE_HZ: u32 = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessOptions {
    pub filter: FilterSpec,
    /// Band-pass every channel instead of only those labelled `EEG*`.
    pub filter_all_channels: bool,
}

impl Default for PreprocessOptions {
    fn default() -> Self {
        Self {
            filter: design_bandpass(0.3, 45.0, f64::from(SAMPLE_RATE_HZ), 4)
                .expect("default band is valid"),
            filter_all_channels: false,
        }
    }
}

impl PreprocessOptions {
    pub fn filters(&self, channel_label: &str) -> bool {
        self.filter_all_channels || channel_label.starts_with("EEG")
    }
}

/// Epoch bookkeeping for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecordSummary {
    pub subject_key: String,
    pub night: u32,
    pub signal_epochs: usize,
    pub labeled_epochs: usize,
    pub excluded_epochs: usize,
    pub retained_epochs: usize,
}

/// `N × C × T` epochs with one label and subject key per epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochDataset {
    pub x: Tensor3<f32>,
    pub y: Vec<StageClass>,
    pub subject_keys: Vec<String>,
    pub channel_labels: Vec<String>,
    pub sample_rate_hz: u32,
}

impl EpochDataset {
    pub fn new(
        x: Tensor3<f32>,
        y: Vec<StageClass>,
        subject_keys: Vec<String>,
        channel_labels: Vec<String>,
        sample_rate_hz: u32,
    ) -> Result<Self, PreprocessError> {
        let d = Self {
            x,
            y,
            subject_keys,
            channel_labels,
            sample_rate_hz,
        };
        d.validate()?;
        Ok(d)
    }

    pub fn empty(channel_labels: Vec<String>, epoch_len: usize) -> Self {
        Self {
            x: Tensor3::zeros(0, channel_labels.len(), epoch_len),
            y: Vec::new(),
            subject_keys: Vec::new(),
            channel_labels,
            sample_rate_hz: SAMPLE_RATE_HZ,
        }
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        let (n, c, _) = self.x.shape();
        if self.y.len() != n || self.subject_keys.len() != n {
            return Err(PreprocessError::InvalidDataset(format!(
                "{n} epochs but {} labels and {} subject keys",
                self.y.len(),
                self.subject_keys.len()
            )));
        }
        if self.channel_labels.len() != c {
            return Err(PreprocessError::InvalidDataset(format!(
                "{c} channels but {} channel labels",
                self.channel_labels.len()
            )));
        }
        if !self.x.all_finite() {
            return Err(PreprocessError::InvalidDataset("non-finite sample".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_channels(&self) -> usize {
        self.x.channels()
    }

    pub fn epoch_len(&self) -> usize {
        self.x.length()
    }

    /// Distinct subject keys in sorted order.
    pub fn subjects(&self) -> Vec<String> {
        self.subject_keys
            .iter()
            .cloned()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Epochs in `indices` order, as a batch tensor.
    pub fn gather(&self, indices: &[usize]) -> Tensor3<f32> {
        let (_, c, t) = self.x.shape();
        let mut out = Tensor3::zeros(indices.len(), c, t);
        let stride = c * t;
        for (row, &i) in indices.iter().enumerate() {
            out.data_mut()[row * stride..(row + 1) * stride]
                .copy_from_slice(&self.x.data()[i * stride..(i + 1) * stride]);
        }
        out
    }

    pub fn labels_of(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.y[i].index()).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.gather(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
            subject_keys: indices
                .iter()
                .map(|&i| self.subject_keys[i].clone())
                .collect(),
            channel_labels: self.channel_labels.clone(),
            sample_rate_hz: self.sample_rate_hz,
        }
    }

    pub fn append(&mut self, other: EpochDataset) -> Result<(), PreprocessError> {
        if other.channel_labels != self.channel_labels
            || other.epoch_len() != self.epoch_len()
            || other.sample_rate_hz != self.sample_rate_hz
        {
            return Err(PreprocessError::InvalidDataset(
                "cannot concatenate datasets with different layouts".into(),
            ));
        }
        let (n, c, t) = self.x.shape();
        let mut data = std::mem::replace(&mut self.x, Tensor3::zeros(0, c, t)).into_vec();
        data.extend_from_slice(other.x.data());
        self.x = Tensor3::from_vec(n + other.len(), c, t, data)
            .map_err(|e| PreprocessError::InvalidDataset(e.to_string()))?;
        self.y.extend(other.y);
        self.subject_keys.extend(other.subject_keys);
        Ok(())
    }
}

/// Filters, labels, trims, epochs and standardizes one record.
pub fn preprocess_record(
    record: &RawRecord,
    channels: &[String],
    opts: &PreprocessOptions,
) -> Result<(EpochDataset, RecordSummary), PreprocessError> {
    let traces = channels
        .iter()
        .map(|c| {
            record
                .signals
                .get(c)
                .ok_or_else(|| PreprocessError::MissingChannel(c.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let signal_epochs = traces
        .iter()
        .map(|t| t.samples.len() / EPOCH_SAMPLES)
        .min()
        .unwrap_or(0);

    let labels = expand_epoch_labels(&record.events, EPOCH_SECONDS)?;
    let labeled_epochs = labels.iter().filter(|l| l.is_covered()).count();
    let kept: Vec<(usize, StageClass)> = labels
        .iter()
        .enumerate()
        .filter_map(|(i, l)| l.stage().map(|s| (i, s)))
        .collect();
    let excluded_epochs = labeled_epochs - kept.len();
    let stages: Vec<StageClass> = kept.iter().map(|&(_, s)| s).collect();
    let range = trim_wake(&stages)?;
    let kept = &kept[range];
    if let Some(&(last, _)) = kept.last() {
        if last >= signal_epochs {
            return Err(PreprocessError::EpochAlignmentError(format!(
                "record {}{} labels epoch {last} but signals hold {signal_epochs} epochs",
                record.subject_key, record.night
            )));
        }
    }

    let n = kept.len();
    let c = channels.len();
    let mut x = Tensor3::zeros(n, c, EPOCH_SAMPLES);
    for (ci, trace) in traces.iter().enumerate() {
        let filtered;
        let samples: &[f32] = if opts.filters(&trace.label) {
            filtered = filtfilt_f32(&trace.samples, &opts.filter)?;
            &filtered
        } else {
            &trace.samples
        };
        let (mut sum, mut sum_sq) = (0.0f64, 0.0f64);
        for &(epoch, _) in kept {
            for &v in &samples[epoch * EPOCH_SAMPLES..(epoch + 1) * EPOCH_SAMPLES] {
                sum += f64::from(v);
            }
        }
        let count = (n * EPOCH_SAMPLES).max(1) as f64;
        let mean = sum / count;
        for &(epoch, _) in kept {
            for &v in &samples[epoch * EPOCH_SAMPLES..(epoch + 1) * EPOCH_SAMPLES] {
                let d = f64::from(v) - mean;
                sum_sq += d * d;
            }
        }
        let std = (sum_sq / count).sqrt();
        let scale = if std > 0.0 { 1.0 / std } else { 1.0 };
        for (row, &(epoch, _)) in kept.iter().enumerate() {
            let src = &samples[epoch * EPOCH_SAMPLES..(epoch + 1) * EPOCH_SAMPLES];
            for (dst, &v) in x.row_mut(row, ci).iter_mut().zip(src) {
                *dst = ((f64::from(v) - mean) * scale) as f32;
            }
        }
    }

    let summary = RecordSummary {
        subject_key: record.subject_key.clone(),
        night: record.night,
        signal_epochs,
        labeled_epochs,
        excluded_epochs,
        retained_epochs: n,
    };
    let dataset = EpochDataset::new(
        x,
        kept.iter().map(|&(_, s)| s).collect(),
        vec![record.subject_key.clone(); n],
        channels.to_vec(),
        SAMPLE_RATE_HZ,
    )?;
    Ok((dataset, summary))
}

/// Preprocesses every record and concatenates them in (subject, night)
/// order. Any failing record aborts the build.
pub fn build_epoch_dataset(
    records: &[RawRecord],
    channels: &[String],
    opts: &PreprocessOptions,
) -> Result<EpochDataset, PreprocessError> {
    let mut order: Vec<&RawRecord> = records.iter().collect();
    order.sort_by(|a, b| (&a.subject_key, a.night).cmp(&(&b.subject_key, b.night)));
    let mut out = EpochDataset::empty(channels.to_vec(), EPOCH_SAMPLES);
    for r in order {
        out.append(preprocess_record(r, channels, opts)?.0)?;
    }
    Ok(out)
}
