//! Helpers shared by the integration test targets: finite-difference
//! gradient oracles, an independent metrics tally, an independent filter
//! response evaluation and toy datasets.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ulw_core::model::{build_model, model_backward, model_forward, ModelConfig, ModelParams};
use ulw_core::nn::{Mode, Tensor3};
use ulw_core::preprocess::{EpochDataset, FilterSpec, StageClass};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

pub fn random_tensor(b: usize, c: usize, l: usize, seed: u64) -> Tensor3<f64> {
    Tensor3::from_vec(b, c, l, random_vec(b * c * l, seed)).unwrap()
}

/// Relative error with a small absolute floor so that gradients which are
/// zero on both sides do not divide by zero.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
    (analytic - numeric).abs() / scale
}

/// Largest relative error between `analytic` and a central difference of
/// `loss_at(i, value)`, which must evaluate the loss with coordinate `i`
/// set to `value`. Step is `1e-4 * max(1, |theta_i|)`.
pub fn fd_max_rel(
    theta: &[f64],
    analytic: &[f64],
    mut loss_at: impl FnMut(usize, f64) -> f64,
) -> f64 {
    assert_eq!(theta.len(), analytic.len(), "gradient length");
    let mut worst = 0.0f64;
    for (i, (&t, &a)) in theta.iter().zip(analytic).enumerate() {
        let h = 1e-4 * t.abs().max(1.0);
        let numeric = (loss_at(i, t + h) - loss_at(i, t - h)) / (2.0 * h);
        worst = worst.max(rel_err(a, numeric));
    }
    worst
}

/// Weighted sum `sum(w * y)`: a linear functional whose gradient is `w`.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn flat_params(p: &ModelParams<f64>) -> Vec<f64> {
    p.trainable()
        .iter()
        .flat_map(|v| v.values.iter().copied())
        .collect()
}

pub fn with_param(p: &ModelParams<f64>, index: usize, value: f64) -> ModelParams<f64> {
    let mut q = p.clone();
    let mut i = index;
    for view in q.trainable_mut() {
        if i < view.values.len() {
            view.values[i] = value;
            break;
        }
        i -= view.values.len();
    }
    q
}

/// The tiny network used for the whole-model gradient check.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        n_blocks: 2,
        filters: vec![2, 3],
        n_input_channels: 2,
        input_length: 32,
        ..ModelConfig::default()
    }
}

/// Max relative error of the full-model gradient (training mode, dropout
/// masks replayed from a fixed seed) over every trainable scalar.
pub fn full_model_gradient_error(seed: u64) -> f64 {
    let cfg = tiny_config();
    let params: ModelParams<f64> = build_model(&cfg, seed).unwrap();
    let x = random_tensor(2, cfg.n_input_channels, cfg.input_length, seed + 100);
    let labels = [1usize, 3];
    let loss = |p: &ModelParams<f64>| {
        let (_, cache) = model_forward(p, &x, Mode::Train, &mut rng(seed + 7)).unwrap();
        model_backward(p, &cache, &labels).unwrap()
    };
    let (_, grads) = loss(&params);
    fd_max_rel(&flat_params(&params), &flat_params(&grads), |i, v| {
        loss(&with_param(&params, i, v)).0
    })
}

/// Accuracy, per-class F1 and kappa computed from label pairs directly,
/// without a confusion matrix.
pub struct BruteMetrics {
    pub accuracy: f64,
    pub f1: [f64; 5],
    pub macro_f1: f64,
    pub kappa: f64,
}

pub fn brute_metrics(truth: &[usize], pred: &[usize]) -> BruteMetrics {
    let n = truth.len() as f64;
    let pairs: Vec<(usize, usize)> = truth.iter().copied().zip(pred.iter().copied()).collect();
    let agree = pairs.iter().filter(|(t, p)| t == p).count() as f64;
    let mut f1 = [0.0; 5];
    let mut chance = 0.0;
    for (c, f) in f1.iter_mut().enumerate() {
        let tp = pairs.iter().filter(|&&(t, p)| t == c && p == c).count() as f64;
        let fp = pairs.iter().filter(|&&(t, p)| t != c && p == c).count() as f64;
        let fn_ = pairs.iter().filter(|&&(t, p)| t == c && p != c).count() as f64;
        let denom = 2.0 * tp + fp + fn_;
        *f = if denom == 0.0 { 0.0 } else { 2.0 * tp / denom };
        let t_c = pairs.iter().filter(|&&(t, _)| t == c).count() as f64;
        let p_c = pairs.iter().filter(|&&(_, p)| p == c).count() as f64;
        chance += (t_c / n) * (p_c / n);
    }
    let p_o = agree / n;
    let kappa = if chance == 1.0 {
        if p_o == 1.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (p_o - chance) / (1.0 - chance)
    };
    BruteMetrics {
        accuracy: p_o,
        f1,
        macro_f1: f1.iter().sum::<f64>() / 5.0,
        kappa,
    }
}

/// Magnitude of the cascade's frequency response, evaluating each section
/// as a ratio of polynomials in `z^-1` from its coefficients.
pub fn cascade_gain(spec: &FilterSpec, freq_hz: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI * freq_hz / spec.sample_rate_hz;
    let mut gain = 1.0;
    for s in &spec.sections {
        let (b, a) = ([s[0], s[1], s[2]], [1.0, s[3], s[4]]);
        let poly = |c: [f64; 3]| {
            let re: f64 = (0..3).map(|k| c[k] * (k as f64 * w).cos()).sum();
            let im: f64 = (0..3).map(|k| -c[k] * (k as f64 * w).sin()).sum();
            re.hypot(im)
        };
        gain *= poly(b) / poly(a);
    }
    gain
}

pub fn sine(freq_hz: f64, fs: f64, n: usize, phase: f64) -> Vec<f64> {
    (0..n)
        .map(|i| (2.0 * std::f64::consts::PI * freq_hz * i as f64 / fs + phase).sin())
        .collect()
}

/// `n_subjects` subjects with `per_subject` epochs each; labels cycle.
pub fn toy_dataset(
    n_subjects: usize,
    per_subject: usize,
    channels: usize,
    len: usize,
) -> EpochDataset {
    let n = n_subjects * per_subject;
    let data: Vec<f32> = (0..n * channels * len)
        .map(|i| (i % 97) as f32 / 97.0)
        .collect();
    let x = Tensor3::from_vec(n, channels, len, data).unwrap();
    let y = (0..n)
        .map(|i| StageClass::from_index(i % 5).unwrap())
        .collect();
    let keys = (0..n)
        .map(|i| format!("SC4{:02}", i / per_subject))
        .collect();
    let labels = (0..channels).map(|c| format!("ch{c}")).collect();
    EpochDataset::new(x, y, keys, labels, 100).unwrap()
}

/// The 64-epoch sinusoid fixture: default architecture on 4 channels of
/// 600 samples.
pub fn overfit_fixture() -> (EpochDataset, ModelConfig, ulw_core::training::TrainConfig) {
    use ulw_core::synthetic::{sinusoid_dataset, SyntheticSpec};
    let data = sinusoid_dataset(&SyntheticSpec {
        epoch_len: 600,
        ..SyntheticSpec::default()
    });
    let model = ModelConfig {
        input_length: 600,
        ..ModelConfig::default()
    };
    let train = ulw_core::training::TrainConfig {
        epochs: 200,
        batch_size: 16,
        seed: 1,
        ..Default::default()
    };
    (data, model, train)
}

/// Trains on every epoch of the fixture until Infer-mode training accuracy
/// reaches `target`. Returns the epoch reached (if any), the per-epoch
/// losses and the final parameters.
pub fn overfit(target: f64, max_epochs: usize) -> (Option<usize>, Vec<f64>, ModelParams<f32>) {
    let (data, model, train) = overfit_fixture();
    let all: Vec<usize> = (0..data.len()).collect();
    let mut trainer = ulw_core::training::Trainer::new(&data, all.clone(), &model, &train).unwrap();
    let mut losses = Vec::new();
    let mut reached = None;
    for epoch in 0..max_epochs.min(train.epochs) {
        losses.push(trainer.train_epoch(epoch).unwrap().train_loss);
        if trainer.accuracy(&all).unwrap() >= target {
            reached = Some(epoch);
            break;
        }
    }
    (reached, losses, trainer.into_params())
}
