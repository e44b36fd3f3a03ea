mod common;

use proptest::prelude::*;

use common::{random_tensor, rng};
use ulw_core::complexity::{count_flops, count_params, separable_ratio};
use ulw_core::model::{
    build_model, dssc_forward, model_backward, model_backward_logits, model_forward, predict,
    ConvType, ModelConfig, ModelParams,
};
use ulw_core::nn::{
    conv1d_forward, sepconv1d_forward, Conv1dParams, Matrix, Mode, SepConvParams, Tensor3,
};

/// Published parameter counts for each preset.
const TABLE_PARAMS: &[(&str, usize)] = &[
    ("default", 13_337),
    ("blocks-2", 12_841),
    ("blocks-4", 34_713),
    ("ks7-ps4", 13_661),
    ("filters-4-8-16", 5_873),
    ("filters-16-32-64", 34_217),
    ("filters-16-32-64-128", 101_545),
    ("standard-conv", 16_997),
];

/// Published FLOPs in millions.
const TABLE_MFLOPS: &[(&str, f64)] = &[
    ("default", 7.89),
    ("blocks-2", 17.39),
    ("blocks-4", 10.39),
    ("ks7-ps4", 9.19),
    ("filters-4-8-16", 2.54),
    ("filters-16-32-64", 27.22),
    ("filters-16-32-64-128", 36.92),
    ("standard-conv", 15.03),
];

#[test]
fn preset_parameter_counts_match_the_table() {
    for &(name, expected) in TABLE_PARAMS {
        let cfg = ModelConfig::preset(name).unwrap();
        assert_eq!(
            count_params(&cfg).unwrap().total_params as usize,
            expected,
            "{name}"
        );
        let built: ModelParams<f32> = build_model(&cfg, 0).unwrap();
        assert_eq!(built.trainable_count(), expected, "{name} built");
    }
}

#[test]
fn preset_flops_within_ten_percent() {
    for &(name, mflops) in TABLE_MFLOPS {
        let cfg = ModelConfig::preset(name).unwrap();
        let got = count_flops(&cfg, 3000).unwrap().total_flops as f64 / 1e6;
        let rel = (got - mflops).abs() / mflops;
        assert!(
            rel <= 0.10,
            "{name}: {got:.2}M vs {mflops}M ({:.1}%)",
            rel * 100.0
        );
    }
}

#[test]
fn report_totals_are_row_sums() {
    let r = count_flops(&ModelConfig::default(), 3000).unwrap();
    assert_eq!(r.total_params, r.rows.iter().map(|x| x.params).sum::<u64>());
    assert_eq!(r.total_flops, r.rows.iter().map(|x| x.flops).sum::<u64>());
}

#[test]
fn separable_ratio_examples() {
    assert!((separable_ratio(3, 3) - 2.0 / 3.0).abs() < 1e-12);
    assert!((separable_ratio(3, 100_000) - 1.0 / 3.0).abs() < 1e-4);
    assert!((separable_ratio(1, 1) - 2.0).abs() < 1e-12);
}

#[test]
fn extractor_storage_is_independent_of_channel_count() {
    let counts: Vec<usize> = (1..=6)
        .map(|c| {
            let cfg = ModelConfig {
                n_input_channels: c,
                ..ModelConfig::default()
            };
            build_model::<f32>(&cfg, 0).unwrap().extractor_count()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[0] == w[1]), "{counts:?}");
    // only the hidden dense layer grows, by F_n * 64 weights per channel
    let p = |c| {
        count_params(&ModelConfig {
            n_input_channels: c,
            ..ModelConfig::default()
        })
        .unwrap()
        .total_params
    };
    assert_eq!(p(5) - p(4), 32 * 64);
}

#[test]
fn default_concat_width_is_128() {
    let cfg = ModelConfig {
        input_length: 64,
        ..ModelConfig::default()
    };
    let params: ModelParams<f64> = build_model(&cfg, 0).unwrap();
    let x = random_tensor(2, 4, 64, 1);
    let (probs, cache) = model_forward(&params, &x, Mode::Infer, &mut rng(0)).unwrap();
    assert_eq!(cache.features().cols(), 128);
    for r in 0..2 {
        assert!((probs.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-6);
    }
}

#[test]
fn swapping_channels_and_head_rows_leaves_output_unchanged() {
    let cfg = ModelConfig {
        n_input_channels: 3,
        input_length: 40,
        filters: vec![2, 4, 6],
        ..ModelConfig::default()
    };
    let params: ModelParams<f64> = build_model(&cfg, 3).unwrap();
    let x = random_tensor(2, 3, 40, 4);
    let base = predict(&params, &x).unwrap();

    let mut swapped_x = x.clone();
    for b in 0..2 {
        let (c0, c2) = (x.row(b, 0).to_vec(), x.row(b, 2).to_vec());
        swapped_x.row_mut(b, 0).copy_from_slice(&c2);
        swapped_x.row_mut(b, 2).copy_from_slice(&c0);
    }
    let mut swapped = params.clone();
    let (f, out) = (6, cfg.head_hidden);
    for r in 0..f {
        for o in 0..out {
            let a = r * out + o;
            let b = (2 * f + r) * out + o;
            swapped.head_hidden.weight.swap(a, b);
        }
    }
    let got = predict(&swapped, &swapped_x).unwrap();
    for (a, b) in base.data().iter().zip(got.data()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn duplicated_channel_doubles_the_extractor_gradient() {
    let one = ModelConfig {
        n_blocks: 2,
        filters: vec![2, 3],
        n_input_channels: 1,
        input_length: 24,
        head_hidden: 4,
        ..ModelConfig::default()
    };
    let two = ModelConfig {
        n_input_channels: 2,
        ..one.clone()
    };
    let mut p1: ModelParams<f64> = build_model(&one, 5).unwrap();
    // large hidden biases keep every ReLU unit active in both networks
    p1.head_hidden.bias = vec![10.0; 4];
    let mut p2: ModelParams<f64> = build_model(&two, 5).unwrap();
    p2.extractor = p1.extractor.clone();
    let w = &p1.head_hidden.weight;
    p2.head_hidden.weight = w.iter().chain(w.iter()).copied().collect();
    p2.head_hidden.bias = p1.head_hidden.bias.clone();
    p2.head_out = p1.head_out.clone();

    let x1 = random_tensor(2, 1, 24, 6);
    let mut x2 = Tensor3::zeros(2, 2, 24);
    for b in 0..2 {
        x2.row_mut(b, 0).copy_from_slice(x1.row(b, 0));
        x2.row_mut(b, 1).copy_from_slice(x1.row(b, 0));
    }
    let g = Matrix::from_vec(2, 5, common::random_vec(10, 7)).unwrap();
    let (_, c1) = model_forward(&p1, &x1, Mode::Infer, &mut rng(0)).unwrap();
    let (_, c2) = model_forward(&p2, &x2, Mode::Infer, &mut rng(0)).unwrap();
    let g1 = model_backward_logits(&p1, &c1, &g).unwrap();
    let g2 = model_backward_logits(&p2, &c2, &g).unwrap();
    let n = p1.extractor_count();
    let (f1, f2) = (common::flat_params(&g1), common::flat_params(&g2));
    assert!(f1[..n].iter().any(|v| v.abs() > 1e-6));
    for i in 0..n {
        assert!(
            (f2[i] - 2.0 * f1[i]).abs() <= 1e-12 * f1[i].abs().max(1.0),
            "param {i}"
        );
    }
}

#[test]
fn degenerate_forward_has_closed_form_head_bias_gradient() {
    let cfg = ModelConfig {
        input_length: 50,
        ..ModelConfig::default()
    };
    let mut params: ModelParams<f64> = build_model(&cfg, 8).unwrap();
    for block in &mut params.extractor {
        block.bn1.gamma.iter_mut().for_each(|g| *g = 0.0);
        block.bn2.gamma.iter_mut().for_each(|g| *g = 0.0);
    }
    let x = Tensor3::zeros(3, 4, 50);
    let labels = [0usize, 2, 2];
    let (probs, cache) = model_forward(&params, &x, Mode::Infer, &mut rng(0)).unwrap();
    // all biases start at zero, so every logit is zero
    for v in probs.data() {
        assert!((v - 0.2).abs() < 1e-12);
    }
    let (_, g) = model_backward(&params, &cache, &labels).unwrap();
    for c in 0..5 {
        let onehot = labels.iter().filter(|&&l| l == c).count() as f64;
        let expected = (3.0 * 0.2 - onehot) / 3.0;
        assert!((g.head_out.bias[c] - expected).abs() < 1e-12, "class {c}");
    }
}

#[test]
fn pointwise_only_separable_conv_is_a_diagonally_scaled_standard_conv() {
    let mut sep = SepConvParams::<f64>::init(1, 3, 4, 2, &mut rng(9));
    sep.bias = vec![0.1, -0.2, 0.3, 0.0];
    let mut std = Conv1dParams::<f64>::zeros(1, 3, 4, 2);
    for m in 0..3 {
        for n in 0..4 {
            std.kernel[m * 4 + n] = sep.depthwise[m] * sep.pointwise[m * 4 + n];
        }
    }
    std.bias = sep.bias.clone();
    let x = random_tensor(2, 3, 9, 10);
    let a = sepconv1d_forward(&x, &sep).unwrap().0;
    let b = conv1d_forward(&x, &std).unwrap().0;
    for (u, v) in a.data().iter().zip(b.data()) {
        assert!((u - v).abs() < 1e-12);
    }
}

#[test]
fn infer_forward_is_bitwise_repeatable_and_seeded_build_is_deterministic() {
    let cfg = common::tiny_config();
    let a: ModelParams<f32> = build_model(&cfg, 11).unwrap();
    let b: ModelParams<f32> = build_model(&cfg, 11).unwrap();
    assert_eq!(a, b);
    let x = random_tensor(3, 2, 32, 12).cast::<f32>();
    let p1 = predict(&a, &x).unwrap();
    let p2 = predict(&a, &x).unwrap();
    assert_eq!(p1.data(), p2.data());
    let (t1, _) = model_forward(&a, &x, Mode::Train, &mut rng(1)).unwrap();
    let (t2, _) = model_forward(&a, &x, Mode::Train, &mut rng(1)).unwrap();
    assert_eq!(t1.data(), t2.data());
}

fn random_config() -> impl Strategy<Value = ModelConfig> {
    (
        1usize..=4,
        1usize..=7,
        prop::sample::select(vec![2usize, 4]),
        1usize..=3,
        1usize..=6,
        prop::bool::ANY,
        1usize..=8,
        1usize..=70,
    )
        .prop_map(|(n_blocks, k, pool, stride, c, standard, f0, hidden)| {
            let filters: Vec<usize> = (0..n_blocks).map(|i| f0 + 3 * i).collect();
            ModelConfig {
                n_blocks,
                kernel_size: k,
                pool_size: pool,
                pool_stride: stride,
                filters,
                conv_type: if standard {
                    ConvType::Standard
                } else {
                    ConvType::Separable
                },
                n_input_channels: c,
                head_hidden: hidden,
                ..ModelConfig::default()
            }
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn closed_form_count_equals_built_count(cfg in random_config()) {
        let built: ModelParams<f32> = build_model(&cfg, 0).unwrap();
        prop_assert_eq!(count_params(&cfg).unwrap().total_params as usize, built.trainable_count());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn block_streams_agree_for_any_length(len in 1usize..=4096, ps in prop::sample::select(vec![2usize, 4])) {
        let cfg = ModelConfig {
            n_blocks: 1,
            filters: vec![2],
            pool_size: ps,
            pool_stride: ps,
            n_input_channels: 1,
            ..ModelConfig::default()
        };
        let params: ModelParams<f32> = build_model(&cfg, 0).unwrap();
        let x = Tensor3::filled(1, 1, len, 0.5f32);
        // batch-norm training statistics need two values per channel
        let mode = if len >= 2 { Mode::Train } else { Mode::Infer };
        let (y, _) = dssc_forward(&x, &params.extractor[0], mode).unwrap();
        prop_assert_eq!(y.length(), len.div_ceil(ps).div_ceil(ps));
    }
}
