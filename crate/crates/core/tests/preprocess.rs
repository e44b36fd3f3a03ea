mod common;

use proptest::prelude::*;

use common::{cascade_gain, sine};
use ulw_core::edf::{load_record_bytes, HypnogramEvent, RawRecord};
use ulw_core::preprocess::{
    build_epoch_dataset, design_bandpass, expand_epoch_labels, filtfilt, read_cache, trim_wake,
    write_cache, EpochDataset, FilterSpec, PreprocessError, PreprocessOptions, StageClass,
};
use ulw_core::synthetic::{psg_pair, sinusoid_dataset, SyntheticSpec, SLEEP_EDF_CHANNELS};

fn default_filter() -> FilterSpec {
    design_bandpass(0.3, 45.0, 100.0, 4).unwrap()
}

#[test]
fn passband_and_cutoff_gains() {
    let f = default_filter();
    let g10 = cascade_gain(&f, 10.0);
    assert!((0.99..=1.01).contains(&g10), "10 Hz gain {g10}");
    for cutoff in [0.3, 45.0] {
        let g = cascade_gain(&f, cutoff);
        let rel = (g - std::f64::consts::FRAC_1_SQRT_2).abs() / std::f64::consts::FRAC_1_SQRT_2;
        assert!(rel < 0.02, "{cutoff} Hz gain {g}");
    }
    assert!(cascade_gain(&f, 0.0) < 1e-12);
    assert!(cascade_gain(&f, (0.3f64 * 45.0).sqrt()) > 0.99);
    // the library's own response agrees with the independent evaluation
    for hz in [0.1, 1.0, 10.0, 30.0, 49.0] {
        assert!((f.response(hz).norm() - cascade_gain(&f, hz)).abs() < 1e-12);
    }
}

#[test]
fn ten_hertz_sine_keeps_amplitude_and_phase() {
    let f = default_filter();
    let x = sine(10.0, 100.0, 3000, 0.4);
    let y = filtfilt(&x, &f).unwrap();
    assert_eq!(y.len(), x.len());
    let mid = 500..2500;
    let peak = y[mid.clone()].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!((peak - 1.0).abs() < 0.02, "peak {peak}");
    // the sine repeats every 10 samples, so search within half a period
    let best_lag = (-4i64..=4)
        .max_by(|&a, &b| {
            let corr = |lag: i64| -> f64 {
                mid.clone()
                    .map(|i| x[i] * y[(i as i64 + lag) as usize])
                    .sum()
            };
            corr(a).total_cmp(&corr(b))
        })
        .unwrap();
    assert_eq!(best_lag, 0);
}

#[test]
fn constant_input_is_rejected() {
    let f = default_filter();
    let y = filtfilt(&vec![3.0; 6000], &f).unwrap();
    let worst = y[500..5500].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst < 1e-3 * 3.0, "{worst}");
}

#[test]
fn zeros_and_short_inputs() {
    let f = default_filter();
    assert!(filtfilt(&[0.0; 100], &f).unwrap().iter().all(|&v| v == 0.0));
    assert!(matches!(
        filtfilt(&[1.0; 12], &f),
        Err(PreprocessError::SignalTooShort { .. })
    ));
    assert!(design_bandpass(45.0, 0.3, 100.0, 4).is_err());
    assert!(design_bandpass(0.3, 50.0, 100.0, 4).is_err());
}

fn signal(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, len)
}

fn close(a: &[f64], b: &[f64]) -> bool {
    let scale = a.iter().chain(b).fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).all(|(u, v)| (u - v).abs() <= 1e-5 * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn filtfilt_is_linear((x, y) in (13usize..600).prop_flat_map(|n| (signal(n), signal(n))), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = default_filter();
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
        let lhs = filtfilt(&mixed, &f).unwrap();
        let fx = filtfilt(&x, &f).unwrap();
        let fy = filtfilt(&y, &f).unwrap();
        let rhs: Vec<f64> = fx.iter().zip(&fy).map(|(u, v)| a * u + b * v).collect();
        prop_assert!(close(&lhs, &rhs));
    }

    #[test]
    fn filtfilt_commutes_with_time_reversal(x in (13usize..600).prop_flat_map(signal)) {
        let f = default_filter();
        let direct = filtfilt(&x, &f).unwrap();
        let rev: Vec<f64> = x.iter().rev().copied().collect();
        let mut back = filtfilt(&rev, &f).unwrap();
        back.reverse();
        prop_assert!(close(&direct, &back));
    }

    #[test]
    fn trim_covers_every_sleep_epoch(labels in prop::collection::vec(0usize..5, 1..400)) {
        let stages: Vec<StageClass> = labels.iter().map(|&i| StageClass::from_index(i).unwrap()).collect();
        let sleep: Vec<usize> = (0..stages.len()).filter(|&i| stages[i] != StageClass::Wake).collect();
        match trim_wake(&stages) {
            Ok(r) => {
                let (first, last) = (sleep[0], *sleep.last().unwrap());
                prop_assert_eq!(r.start, first.saturating_sub(60));
                prop_assert_eq!(r.end, (last + 61).min(stages.len()));
                prop_assert!(sleep.iter().all(|i| r.contains(i)));
            }
            Err(e) => {
                prop_assert!(sleep.is_empty());
                prop_assert!(matches!(e, PreprocessError::AllWake));
            }
        }
    }

    #[test]
    fn label_expansion_conserves_time(runs in prop::collection::vec((0usize..7, 1u32..40), 1..30)) {
        let texts = ["Sleep stage W", "Sleep stage 1", "Sleep stage 2", "Sleep stage 3",
            "Sleep stage 4", "Sleep stage R", "Movement time"];
        let mut onset = 0.0;
        let mut events = Vec::new();
        for (t, n) in runs {
            let duration = 30.0 * f64::from(n);
            events.push(HypnogramEvent { onset_s: onset, duration_s: duration, stage_text: texts[t].into() });
            onset += duration;
        }
        let labels = expand_epoch_labels(&events, 30.0).unwrap();
        let covered = labels.iter().filter(|l| l.is_covered()).count();
        let total: f64 = events.iter().map(|e| e.duration_s).sum();
        prop_assert_eq!(total, 30.0 * covered as f64);
    }
}

#[test]
fn trim_examples() {
    let mut s = vec![StageClass::Wake; 200];
    s.extend(vec![StageClass::N2; 100]);
    s.extend(vec![StageClass::Wake; 200]);
    // brute-force: last sleep index is 299, so the exclusive end is 299 + 61
    let last = s.iter().rposition(|&v| v != StageClass::Wake).unwrap();
    assert_eq!(last, 299);
    assert_eq!(trim_wake(&s).unwrap(), 140..360);

    let mut s = vec![StageClass::Wake; 10];
    s.extend(vec![StageClass::N1; 5]);
    assert_eq!(trim_wake(&s).unwrap().start, 0);
}

fn record(name: &str, stages: &[&str], seed: u64) -> RawRecord {
    let (psg, hyp) = psg_pair(&SLEEP_EDF_CHANNELS, stages, seed).unwrap();
    load_record_bytes(name, &psg, &hyp, &channels()).unwrap()
}

fn channels() -> Vec<String> {
    SLEEP_EDF_CHANNELS.iter().map(|s| s.to_string()).collect()
}

fn sleep_texts(n: usize) -> Vec<&'static str> {
    let cycle = [
        "Sleep stage 1",
        "Sleep stage 2",
        "Sleep stage 3",
        "Sleep stage 4",
        "Sleep stage R",
        "Sleep stage 2",
    ];
    (0..n).map(|i| cycle[i % cycle.len()]).collect()
}

#[test]
fn built_dataset_shape_and_standardization() {
    let r = record("SC4011E0-PSG.edf", &sleep_texts(100), 1);
    let d = build_epoch_dataset(&[r], &channels(), &PreprocessOptions::default()).unwrap();
    assert_eq!(d.x.shape(), (100, 4, 3000));
    assert!(d.x.all_finite());
    assert_eq!(d.sample_rate_hz, 100);
    assert!(d.subject_keys.iter().all(|k| k == "SC401"));
    for c in 0..4 {
        let vals: Vec<f64> = (0..100)
            .flat_map(|e| d.x.row(e, c).iter().map(|&v| f64::from(v)))
            .collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64;
        assert!(mean.abs() <= 1e-4, "channel {c} mean {mean}");
        assert!((0.999..=1.001).contains(&var), "channel {c} var {var}");
    }
}

#[test]
fn unknown_stage_epoch_is_dropped() {
    let texts = sleep_texts(40);
    let base = build_epoch_dataset(
        &[record("SC4011E0-PSG.edf", &texts, 2)],
        &channels(),
        &PreprocessOptions::default(),
    )
    .unwrap();
    let mut marked = texts.clone();
    marked[17] = "Sleep stage ?";
    let d = build_epoch_dataset(
        &[record("SC4011E0-PSG.edf", &marked, 2)],
        &channels(),
        &PreprocessOptions::default(),
    )
    .unwrap();
    assert_eq!(d.len(), base.len() - 1);
    let mut expected = base.y.clone();
    expected.remove(17);
    assert_eq!(d.y, expected);
}

#[test]
fn records_concatenate_in_subject_night_order() {
    let mut texts = vec!["Sleep stage W"; 3];
    texts.extend(sleep_texts(4));
    texts.push("Movement time");
    let records = vec![
        record("SC4022E0-PSG.edf", &texts, 3),
        record("SC4011E0-PSG.edf", &texts, 4),
        record("SC4021E0-PSG.edf", &texts, 5),
    ];
    let d = build_epoch_dataset(&records, &channels(), &PreprocessOptions::default()).unwrap();
    assert_eq!(d.len(), 21);
    let keys: Vec<&str> = d.subject_keys.iter().map(String::as_str).collect();
    assert_eq!(keys[..7], ["SC401"; 7]);
    assert_eq!(keys[7..], ["SC402"; 14]);
    assert_eq!(d.subjects(), vec!["SC401".to_string(), "SC402".to_string()]);
}

#[test]
fn all_wake_record_is_an_error() {
    let r = record("SC4011E0-PSG.edf", &["Sleep stage W"; 5], 6);
    let err = build_epoch_dataset(&[r], &channels(), &PreprocessOptions::default()).unwrap_err();
    assert!(matches!(err, PreprocessError::AllWake));
}

#[test]
fn cache_files_round_trip_and_detect_corruption() {
    let dir = tempfile::tempdir().unwrap();
    for n in [0usize, 10] {
        let d = if n == 0 {
            EpochDataset::empty(vec!["a".into(), "b".into()], 64)
        } else {
            sinusoid_dataset(&SyntheticSpec {
                n_epochs: n,
                n_channels: 2,
                epoch_len: 64,
                ..SyntheticSpec::default()
            })
        };
        let path = dir.path().join(format!("d{n}.ulws"));
        write_cache(&d, &path).unwrap();
        assert_eq!(read_cache(&path).unwrap(), d);
    }
    let path = dir.path().join("d10.ulws");
    let mut bytes = std::fs::read(&path).unwrap();
    let mid = bytes.len() / 2;
    bytes[mid] ^= 0x40;
    std::fs::write(&path, &bytes).unwrap();
    assert!(matches!(
        read_cache(&path),
        Err(PreprocessError::ChecksumMismatch)
    ));
}
