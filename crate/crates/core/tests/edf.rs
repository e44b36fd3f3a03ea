use proptest::prelude::*;

use ulw_core::edf::writer::{encode_edf, encode_hypnogram, fixture_header, fixture_signal};
use ulw_core::edf::{
    load_record_bytes, parse_edf_header, parse_hypnogram, read_digital, read_signal,
    subject_and_night, EdfError, EdfHeader, HypnogramEvent, SignalHeader,
};
use ulw_core::synthetic::{psg_pair, SLEEP_EDF_CHANNELS};

fn field(out: &mut Vec<u8>, s: &str, width: usize) {
    let mut b = s.as_bytes().to_vec();
    b.resize(width, b' ');
    out.extend_from_slice(&b);
}

/// Header bytes written straight from the format's byte layout.
fn hand_header(n_records: &str, phys: (&str, &str), dig: (&str, &str)) -> Vec<u8> {
    let mut h = Vec::new();
    field(&mut h, "0", 8);
    field(&mut h, "patient", 80);
    field(&mut h, "recording", 80);
    field(&mut h, "01.02.03", 8);
    field(&mut h, "04.05.06", 8);
    field(&mut h, "768", 8);
    field(&mut h, "", 44);
    field(&mut h, n_records, 8);
    field(&mut h, "1", 8);
    field(&mut h, "2", 4);
    for l in ["EEG A", "EEG B"] {
        field(&mut h, l, 16);
    }
    for _ in 0..2 {
        field(&mut h, "AgAgCl", 80);
    }
    for _ in 0..2 {
        field(&mut h, "uV", 8);
    }
    for v in [phys.0, phys.0, phys.1, phys.1, dig.0, dig.0, dig.1, dig.1] {
        field(&mut h, v, 8);
    }
    for _ in 0..2 {
        field(&mut h, "HP:0.1Hz", 80);
    }
    for _ in 0..2 {
        field(&mut h, "4", 8);
    }
    for _ in 0..2 {
        field(&mut h, "", 32);
    }
    h
}

#[test]
fn hand_built_header_parses_field_by_field() {
    let bytes = hand_header("1", ("-204.8", "204.7"), ("-2048", "2047"));
    assert_eq!(bytes.len(), 768);
    let h = parse_edf_header(&bytes).unwrap();
    assert_eq!(h.header_bytes, 768);
    assert_eq!(h.version, "0");
    assert_eq!(h.patient_info, "patient");
    assert_eq!(h.start_date, "01.02.03");
    assert_eq!(h.start_time, "04.05.06");
    assert_eq!(h.n_data_records, 1);
    assert_eq!(h.record_duration_s, 1.0);
    assert_eq!(h.n_signals(), 2);
    let s = &h.signals[1];
    assert_eq!(s.label, "EEG B");
    assert_eq!(s.transducer, "AgAgCl");
    assert_eq!(s.physical_dimension, "uV");
    assert_eq!((s.physical_min, s.physical_max), (-204.8, 204.7));
    assert_eq!((s.digital_min, s.digital_max), (-2048, 2047));
    assert_eq!(s.prefiltering, "HP:0.1Hz");
    assert_eq!(s.samples_per_record, 4);
}

#[test]
fn degenerate_ranges_are_rejected() {
    let bytes = hand_header("1", ("5", "5"), ("-2048", "2047"));
    assert!(matches!(
        parse_edf_header(&bytes),
        Err(EdfError::InvariantViolation(_))
    ));
    let bytes = hand_header("1", ("-1", "1"), ("7", "7"));
    assert!(matches!(
        parse_edf_header(&bytes),
        Err(EdfError::InvariantViolation(_))
    ));
    let bytes = hand_header("-1", ("-1", "1"), ("-2048", "2047"));
    assert!(parse_edf_header(&bytes).is_err());
    let bytes = hand_header("x", ("-1", "1"), ("-2048", "2047"));
    assert!(matches!(
        parse_edf_header(&bytes),
        Err(EdfError::MalformedField { .. })
    ));
    let bytes = hand_header("1", ("-1", "1"), ("-2048", "2047"));
    assert!(matches!(
        parse_edf_header(&bytes[..600]),
        Err(EdfError::TruncatedHeader { .. })
    ));
}

#[test]
fn digital_to_physical_matches_hand_values() {
    let mut bytes = hand_header("1", ("-204.8", "204.7"), ("-2048", "2047"));
    // signal A: 0, min, max, 1; signal B: -1, 2047, -2048, 0
    for d in [0i16, -2048, 2047, 1, -1, 2047, -2048, 0] {
        bytes.extend_from_slice(&d.to_le_bytes());
    }
    let h = parse_edf_header(&bytes).unwrap();
    let a = read_signal(&bytes, &h, 0).unwrap();
    assert_eq!(a.sample_rate_hz, 4.0);
    // (0 + 2048) * 409.5 / 4095 - 204.8 = 0
    assert!(a.samples[0].abs() < 1e-6);
    assert_eq!(a.samples[1], -204.8f32);
    assert_eq!(a.samples[2], 204.7f32);
    // one quantization step is 0.1
    assert!((a.samples[3] - 0.1).abs() < 1e-6);
    let s = &h.signals[0];
    assert_eq!(s.to_physical(-2048), -204.8);
    assert!((s.to_physical(2047) - 204.7).abs() < 1e-12);
    assert_eq!(
        read_digital(&bytes, &h, 1).unwrap(),
        vec![-1, 2047, -2048, 0]
    );
    assert!(matches!(
        read_signal(&bytes[..bytes.len() - 1], &h, 1),
        Err(EdfError::TruncatedData { .. })
    ));
}

#[test]
fn hand_built_tal_gives_one_event() {
    let mut tal = b"+0\x14\x14\x00".to_vec();
    tal.extend_from_slice(b"+0\x151800\x14Sleep stage W\x14\x00");
    tal.extend_from_slice(b"+1800\x151800\x14Sleep stage 1\x14\x00");
    if tal.len() % 2 == 1 {
        tal.push(0);
    }
    let mut sig = fixture_signal(
        "EDF Annotations",
        tal.len() / 2,
        (-32768.0, 32767.0),
        (-32768, 32767),
    );
    sig.physical_dimension.clear();
    let header = fixture_header(vec![sig], 1, 0.0, true);
    let words: Vec<i16> = tal
        .chunks_exact(2)
        .map(|w| i16::from_le_bytes([w[0], w[1]]))
        .collect();
    let bytes = encode_edf(&header, &[words]).unwrap();
    let events = parse_hypnogram(&bytes).unwrap();
    assert_eq!(
        events,
        vec![
            HypnogramEvent {
                onset_s: 0.0,
                duration_s: 1800.0,
                stage_text: "Sleep stage W".into()
            },
            HypnogramEvent {
                onset_s: 1800.0,
                duration_s: 1800.0,
                stage_text: "Sleep stage 1".into()
            },
        ]
    );
}

#[test]
fn record_loading_and_naming() {
    let stages = ["Sleep stage W", "Sleep stage 2", "Sleep stage R"];
    let (psg, hyp) = psg_pair(&SLEEP_EDF_CHANNELS, &stages, 3).unwrap();
    let wanted: Vec<String> = SLEEP_EDF_CHANNELS.iter().map(|s| s.to_string()).collect();
    let r = load_record_bytes("SC4001E0-PSG.edf", &psg, &hyp, &wanted).unwrap();
    assert_eq!(r.subject_key, "SC400");
    assert_eq!(r.night, 1);
    assert_eq!(r.signals.len(), 4);
    assert!(r
        .signals
        .values()
        .all(|s| s.samples.len() == 9000 && s.sample_rate_hz == 100.0));
    assert_eq!(r.events.len(), 3);

    let (psg, hyp) = psg_pair(&SLEEP_EDF_CHANNELS[..3], &stages, 3).unwrap();
    let err = load_record_bytes("SC4001E0-PSG.edf", &psg, &hyp, &wanted).unwrap_err();
    assert!(matches!(err, EdfError::MissingChannel(ref c) if c == "EMG submental"));

    assert_eq!(
        subject_and_night("SC4031E0-PSG.edf").unwrap(),
        ("SC403".to_string(), 1)
    );
    assert_eq!(
        subject_and_night("SC4192E0-PSG.edf").unwrap(),
        ("SC419".to_string(), 2)
    );
}

#[test]
fn low_rate_channel_is_rejected() {
    let signals = vec![
        fixture_signal("EEG Fpz-Cz", 3000, (-1.0, 1.0), (-100, 100)),
        fixture_signal("EMG submental", 30, (-1.0, 1.0), (-100, 100)),
    ];
    let psg = encode_edf(
        &fixture_header(signals, 1, 30.0, false),
        &[vec![0; 3000], vec![0; 30]],
    )
    .unwrap();
    let hyp = encode_hypnogram(&[HypnogramEvent {
        onset_s: 0.0,
        duration_s: 30.0,
        stage_text: "Sleep stage W".into(),
    }])
    .unwrap();
    let wanted = vec!["EEG Fpz-Cz".to_string(), "EMG submental".to_string()];
    let err = load_record_bytes("SC4001E0-PSG.edf", &psg, &hyp, &wanted).unwrap_err();
    assert!(matches!(err, EdfError::UnsupportedSampleRate { .. }));
}

fn text(max: usize) -> impl Strategy<Value = String> {
    proptest::string::string_regex(&format!("[A-Za-z0-9 _.-]{{0,{max}}}"))
        .unwrap()
        .prop_map(|s| s.trim().to_string())
}

prop_compose! {
    fn signal_header()(
        label in text(16),
        dim in text(8),
        pmin in -5000i32..5000,
        pspan in 1i32..5000,
        dmin in -32768i32..0,
        dspan in 1i32..32767,
        spr in 1usize..20,
    ) -> SignalHeader {
        let mut s = fixture_signal(&label, spr, (f64::from(pmin) / 10.0, f64::from(pmin + pspan) / 10.0), (dmin, dmin + dspan));
        s.physical_dimension = dim;
        s
    }
}

prop_compose! {
    fn edf_file()(signals in prop::collection::vec(signal_header(), 1..5), n_records in 0i64..4, dur in 1u32..60, seed in any::<u64>())
        -> (EdfHeader, Vec<Vec<i16>>) {
        let mut state = seed;
        let digital = signals
            .iter()
            .map(|s| {
                (0..s.samples_per_record * n_records as usize)
                    .map(|_| {
                        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                        let span = (s.digital_max - s.digital_min + 1) as u64;
                        (s.digital_min as i64 + ((state >> 33) % span) as i64) as i16
                    })
                    .collect()
            })
            .collect();
        (fixture_header(signals, n_records, f64::from(dur), false), digital)
    }
}

proptest! {
    #[test]
    fn round_trip_is_bit_exact((header, digital) in edf_file()) {
        let bytes = encode_edf(&header, &digital).unwrap();
        let parsed = parse_edf_header(&bytes).unwrap();
        prop_assert_eq!(&parsed, &header);
        for (i, d) in digital.iter().enumerate() {
            prop_assert_eq!(&read_digital(&bytes, &parsed, i).unwrap(), d);
        }
        prop_assert_eq!(parse_edf_header(&bytes).unwrap(), parsed);
    }

    #[test]
    fn conversion_is_monotonic(s in signal_header(), a in any::<i16>(), b in any::<i16>()) {
        let clamp = |d: i16| (d as i32).clamp(s.digital_min, s.digital_max) as i16;
        let (d1, d2) = (clamp(a.min(b)), clamp(a.max(b)));
        prop_assume!(d1 < d2);
        prop_assert!(s.to_physical(d1) < s.to_physical(d2));
    }
}
