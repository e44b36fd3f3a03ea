//! Seeded synthetic data: separable epoch datasets and Sleep-EDF-style file
//! pairs for tests and demos.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::edf::writer::{
    encode_edf, encode_hypnogram, fixture_header, fixture_signal, to_digital,
};
use crate::edf::{EdfError, HypnogramEvent};
use crate::nn::Tensor3;
use crate::preprocess::{EpochDataset, StageClass};

/// Channel labels of the four-channel Sleep-EDF montage.
pub const SLEEP_EDF_CHANNELS: [&str; 4] =
    ["EEG Fpz-Cz", "EEG Pz-Oz", "EOG horizontal", "EMG submental"];

/// Dominant frequency (Hz at 100 Hz sampling) per class.
const CLASS_FREQ_HZ: [f64; 5] = [2.0, 5.0, 9.0, 14.0, 20.0];

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_epochs: usize,
    pub n_channels: usize,
    pub epoch_len: usize,
    pub n_subjects: usize,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_epochs: 64,
            n_channels: 4,
            epoch_len: 3000,
            n_subjects: 4,
            noise_std: 0.3,
            seed: 0,
        }
    }
}

/// Class `i % 5` for epoch `i`, subject `i % n_subjects`; each channel is a
/// unit sinusoid at the class frequency with random phase plus Gaussian
/// noise.
pub fn sinusoid_dataset(spec: &SyntheticSpec) -> EpochDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std.max(0.0)).expect("finite std");
    let (n, c, t) = (spec.n_epochs, spec.n_channels, spec.epoch_len);
    let mut x = Tensor3::zeros(n, c, t);
    let mut y = Vec::with_capacity(n);
    let mut subject_keys = Vec::with_capacity(n);
    for i in 0..n {
        let class = StageClass::ALL[i % 5];
        let freq = CLASS_FREQ_HZ[class.index()];
        for ch in 0..c {
            let phase = rng.gen_range(0.0..2.0 * PI);
            for (s, v) in x.row_mut(i, ch).iter_mut().enumerate() {
                let tt = s as f64 / 100.0;
                *v = ((2.0 * PI * freq * tt + phase).sin() + noise.sample(&mut rng)) as f32;
            }
        }
        y.push(class);
        subject_keys.push(subject_key(i % spec.n_subjects.max(1)));
    }
    let channel_labels = (0..c)
        .map(|ch| {
            SLEEP_EDF_CHANNELS
                .get(ch)
                .map_or_else(|| format!("CH{ch}"), |s| s.to_string())
        })
        .collect();
    EpochDataset::new(x, y, subject_keys, channel_labels, 100).expect("consistent by construction")
}

/// Sleep-EDF style subject key, e.g. `SC407`.
pub fn subject_key(i: usize) -> String {
    format!("SC4{i:02}")
}

/// Stage text for a stage class, as written in Sleep-EDF hypnograms.
pub fn stage_text(stage: StageClass) -> &'static str {
    match stage {
        StageClass::Wake => "Sleep stage W",
        StageClass::N1 => "Sleep stage 1",
        StageClass::N2 => "Sleep stage 2",
        StageClass::N3 => "Sleep stage 3",
        StageClass::Rem => "Sleep stage R",
    }
}

/// Merges consecutive equal texts into hypnogram events of 30 s epochs.
pub fn events_from_stage_texts(texts: &[&str]) -> Vec<HypnogramEvent> {
    let mut events: Vec<HypnogramEvent> = Vec::new();
    for (i, &t) in texts.iter().enumerate() {
        match events.last_mut() {
            Some(e) if e.stage_text == t => e.duration_s += 30.0,
            _ => events.push(HypnogramEvent {
                onset_s: 30.0 * i as f64,
                duration_s: 30.0,
                stage_text: t.to_string(),
            }),
        }
    }
    events
}

/// A PSG file with the given channels (100 Hz, one 30 s data record per
/// epoch) and its hypnogram, both as bytes.
pub fn psg_pair(
    channels: &[&str],
    stage_texts: &[&str],
    seed: u64,
) -> Result<(Vec<u8>, Vec<u8>), EdfError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 5.0).expect("finite std");
    let n_records = stage_texts.len();
    let signals: Vec<_> = channels
        .iter()
        .map(|l| fixture_signal(l, 3000, (-500.0, 500.0), (-32768, 32767)))
        .collect();
    let digital: Vec<Vec<i16>> = signals
        .iter()
        .map(|sig| {
            (0..n_records * 3000)
                .map(|s| {
                    let epoch = s / 3000;
                    let freq = match stage_texts[epoch] {
                        "Sleep stage W" => 20.0,
                        "Sleep stage 1" => 6.0,
                        "Sleep stage 2" => 12.0,
                        "Sleep stage 3" | "Sleep stage 4" => 1.5,
                        _ => 8.0,
                    };
                    let v =
                        40.0 * (2.0 * PI * freq * s as f64 / 100.0).sin() + noise.sample(&mut rng);
                    to_digital(sig, v)
                })
                .collect()
        })
        .collect();
    let psg = encode_edf(
        &fixture_header(signals, n_records as i64, 30.0, false),
        &digital,
    )?;
    let hyp = encode_hypnogram(&events_from_stage_texts(stage_texts))?;
    Ok((psg, hyp))
}
