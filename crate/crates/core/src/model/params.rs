//! Learnable state of the network and a uniform view over its arrays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{ConvType, ModelConfig};
use super::ModelError;
use crate::nn::{BatchNormParams, Conv1dParams, DenseParams, Real, SepConvParams};

#[derive(Debug, Clone, PartialEq)]
pub enum ConvLayer<T> {
    Separable(SepConvParams<T>),
    Standard(Conv1dParams<T>),
}

/// What an array is; decides regularization and how it is counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    DepthwiseKernel,
    PointwiseKernel,
    ConvKernel,
    ConvBias,
    BnGamma,
    BnBeta,
    DenseWeight,
    DenseBias,
}

impl ParamKind {
    /// Convolution kernels are the only arrays carrying the L2 penalty.
    pub fn is_conv_kernel(self) -> bool {
        matches!(
            self,
            Self::DepthwiseKernel | Self::PointwiseKernel | Self::ConvKernel
        )
    }
}

#[derive(Debug)]
pub struct ParamView<'a, T> {
    pub name: String,
    pub kind: ParamKind,
    pub values: &'a [T],
}

#[derive(Debug)]
pub struct ParamViewMut<'a, T> {
    pub name: String,
    pub kind: ParamKind,
    pub values: &'a mut [T],
}

impl<T: Real> ConvLayer<T> {
    fn init<R: Rng + ?Sized>(
        conv_type: ConvType,
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        stride: usize,
        rng: &mut R,
    ) -> Self {
        match conv_type {
            ConvType::Separable => Self::Separable(SepConvParams::init(
                kernel_size,
                in_channels,
                out_channels,
                stride,
                rng,
            )),
            ConvType::Standard => Self::Standard(Conv1dParams::init(
                kernel_size,
                in_channels,
                out_channels,
                stride,
                rng,
            )),
        }
    }

    pub fn zeros_like(&self) -> Self {
        match self {
            Self::Separable(p) => Self::Separable(p.zeros_like()),
            Self::Standard(p) => Self::Standard(p.zeros_like()),
        }
    }

    pub fn out_channels(&self) -> usize {
        match self {
            Self::Separable(p) => p.out_channels,
            Self::Standard(p) => p.out_channels,
        }
    }

    fn views<'a>(&'a self, prefix: &str, out: &mut Vec<ParamView<'a, T>>) {
        let mut push = |suffix: &str, kind, values: &'a [T]| {
            out.push(ParamView {
                name: format!("{prefix}.{suffix}"),
                kind,
                values,
            })
        };
        match self {
            Self::Separable(p) => {
                push("depthwise", ParamKind::DepthwiseKernel, &p.depthwise);
                push("pointwise", ParamKind::PointwiseKernel, &p.pointwise);
                push("bias", ParamKind::ConvBias, &p.bias);
            }
            Self::Standard(p) => {
                push("kernel", ParamKind::ConvKernel, &p.kernel);
                push("bias", ParamKind::ConvBias, &p.bias);
            }
        }
    }

    fn views_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<ParamViewMut<'a, T>>) {
        let mut push = |suffix: &str, kind, values: &'a mut [T]| {
            out.push(ParamViewMut {
                name: format!("{prefix}.{suffix}"),
                kind,
                values,
            })
        };
        match self {
            Self::Separable(p) => {
                push("depthwise", ParamKind::DepthwiseKernel, &mut p.depthwise);
                push("pointwise", ParamKind::PointwiseKernel, &mut p.pointwise);
                push("bias", ParamKind::ConvBias, &mut p.bias);
            }
            Self::Standard(p) => {
                push("kernel", ParamKind::ConvKernel, &mut p.kernel);
                push("bias", ParamKind::ConvBias, &mut p.bias);
            }
        }
    }
}

/// One dual-stream block: a main stream of two conv→BN→ReLU→maxpool stages
/// and a shortcut of two width-1 strided convolutions.
#[derive(Debug, Clone, PartialEq)]
pub struct DsscParams<T> {
    pub main_conv1: ConvLayer<T>,
    pub bn1: BatchNormParams<T>,
    pub main_conv2: ConvLayer<T>,
    pub bn2: BatchNormParams<T>,
    pub shortcut_conv1: ConvLayer<T>,
    pub shortcut_conv2: ConvLayer<T>,
    pub pool_size: usize,
    pub pool_stride: usize,
}

impl<T: Real> DsscParams<T> {
    pub fn init<R: Rng + ?Sized>(
        config: &ModelConfig,
        in_channels: usize,
        filters: usize,
        rng: &mut R,
    ) -> Self {
        let ct = config.conv_type;
        let k = config.kernel_size;
        let s = config.pool_stride;
        let eps = T::lit(config.bn_epsilon);
        let momentum = T::lit(config.bn_momentum);
        let main_conv1 = ConvLayer::init(ct, k, in_channels, filters, 1, rng);
        let main_conv2 = ConvLayer::init(ct, k, filters, filters, 1, rng);
        let shortcut_conv1 = ConvLayer::init(ct, 1, in_channels, filters, s, rng);
        let shortcut_conv2 = ConvLayer::init(ct, 1, filters, filters, s, rng);
        Self {
            main_conv1,
            bn1: BatchNormParams::new(filters, eps, momentum),
            main_conv2,
            bn2: BatchNormParams::new(filters, eps, momentum),
            shortcut_conv1,
            shortcut_conv2,
            pool_size: config.pool_size,
            pool_stride: s,
        }
    }

    pub fn out_channels(&self) -> usize {
        self.main_conv2.out_channels()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            main_conv1: self.main_conv1.zeros_like(),
            bn1: self.bn1.zeros_like(),
            main_conv2: self.main_conv2.zeros_like(),
            bn2: self.bn2.zeros_like(),
            shortcut_conv1: self.shortcut_conv1.zeros_like(),
            shortcut_conv2: self.shortcut_conv2.zeros_like(),
            pool_size: self.pool_size,
            pool_stride: self.pool_stride,
        }
    }

    fn views<'a>(&'a self, prefix: &str, out: &mut Vec<ParamView<'a, T>>) {
        self.main_conv1.views(&format!("{prefix}.main_conv1"), out);
        bn_views(&self.bn1, &format!("{prefix}.bn1"), out);
        self.main_conv2.views(&format!("{prefix}.main_conv2"), out);
        bn_views(&self.bn2, &format!("{prefix}.bn2"), out);
        self.shortcut_conv1
            .views(&format!("{prefix}.shortcut_conv1"), out);
        self.shortcut_conv2
            .views(&format!("{prefix}.shortcut_conv2"), out);
    }

    fn views_mut<'a>(&'a mut self, prefix: &str, out: &mut Vec<ParamViewMut<'a, T>>) {
        self.main_conv1
            .views_mut(&format!("{prefix}.main_conv1"), out);
        bn_views_mut(&mut self.bn1, &format!("{prefix}.bn1"), out);
        self.main_conv2
            .views_mut(&format!("{prefix}.main_conv2"), out);
        bn_views_mut(&mut self.bn2, &format!("{prefix}.bn2"), out);
        self.shortcut_conv1
            .views_mut(&format!("{prefix}.shortcut_conv1"), out);
        self.shortcut_conv2
            .views_mut(&format!("{prefix}.shortcut_conv2"), out);
    }
}

fn bn_views<'a, T>(bn: &'a BatchNormParams<T>, prefix: &str, out: &mut Vec<ParamView<'a, T>>) {
    out.push(ParamView {
        name: format!("{prefix}.gamma"),
        kind: ParamKind::BnGamma,
        values: &bn.gamma,
    });
    out.push(ParamView {
        name: format!("{prefix}.beta"),
        kind: ParamKind::BnBeta,
        values: &bn.beta,
    });
}

fn bn_views_mut<'a, T>(
    bn: &'a mut BatchNormParams<T>,
    prefix: &str,
    out: &mut Vec<ParamViewMut<'a, T>>,
) {
    out.push(ParamViewMut {
        name: format!("{prefix}.gamma"),
        kind: ParamKind::BnGamma,
        values: &mut bn.gamma,
    });
    out.push(ParamViewMut {
        name: format!("{prefix}.beta"),
        kind: ParamKind::BnBeta,
        values: &mut bn.beta,
    });
}

fn dense_views<'a, T>(d: &'a DenseParams<T>, prefix: &str, out: &mut Vec<ParamView<'a, T>>) {
    out.push(ParamView {
        name: format!("{prefix}.weight"),
        kind: ParamKind::DenseWeight,
        values: &d.weight,
    });
    out.push(ParamView {
        name: format!("{prefix}.bias"),
        kind: ParamKind::DenseBias,
        values: &d.bias,
    });
}

fn dense_views_mut<'a, T>(
    d: &'a mut DenseParams<T>,
    prefix: &str,
    out: &mut Vec<ParamViewMut<'a, T>>,
) {
    out.push(ParamViewMut {
        name: format!("{prefix}.weight"),
        kind: ParamKind::DenseWeight,
        values: &mut d.weight,
    });
    out.push(ParamViewMut {
        name: format!("{prefix}.bias"),
        kind: ParamKind::DenseBias,
        values: &mut d.bias,
    });
}

/// All parameters of the network. The extractor is stored once and applied
/// to every input channel. The same type doubles as a gradient container
/// (running statistics are then unused).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub config: ModelConfig,
    pub extractor: Vec<DsscParams<T>>,
    pub head_hidden: DenseParams<T>,
    pub head_out: DenseParams<T>,
}

/// Glorot-uniform kernels, zero biases and betas, unit gammas, running
/// statistics at (0, 1). Deterministic in `seed`.
pub fn build_model<T: Real>(config: &ModelConfig, seed: u64) -> Result<ModelParams<T>, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extractor = Vec::with_capacity(config.n_blocks);
    let mut in_channels = 1;
    for &f in &config.filters {
        extractor.push(DsscParams::init(config, in_channels, f, &mut rng));
        in_channels = f;
    }
    let head_hidden = DenseParams::init(config.feature_width(), config.head_hidden, &mut rng);
    let head_out = DenseParams::init(config.head_hidden, config.n_classes, &mut rng);
    Ok(ModelParams {
        config: config.clone(),
        extractor,
        head_hidden,
        head_out,
    })
}

impl<T: Real> ModelParams<T> {
    pub fn zeros_like(&self) -> Self {
        Self {
            config: self.config.clone(),
            extractor: self.extractor.iter().map(DsscParams::zeros_like).collect(),
            head_hidden: self.head_hidden.zeros_like(),
            head_out: self.head_out.zeros_like(),
        }
    }

    /// Every trainable array in a fixed order.
    pub fn trainable(&self) -> Vec<ParamView<'_, T>> {
        let mut out = Vec::new();
        for (i, block) in self.extractor.iter().enumerate() {
            block.views(&format!("block{}", i + 1), &mut out);
        }
        dense_views(&self.head_hidden, "head_hidden", &mut out);
        dense_views(&self.head_out, "head_out", &mut out);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<ParamViewMut<'_, T>> {
        let mut out = Vec::new();
        for (i, block) in self.extractor.iter_mut().enumerate() {
            block.views_mut(&format!("block{}", i + 1), &mut out);
        }
        dense_views_mut(&mut self.head_hidden, "head_hidden", &mut out);
        dense_views_mut(&mut self.head_out, "head_out", &mut out);
        out
    }

    /// Non-trainable batch-norm running statistics, in a fixed order.
    pub fn buffers(&self) -> Vec<&[T]> {
        self.extractor
            .iter()
            .flat_map(|b| {
                [
                    b.bn1.running_mean.as_slice(),
                    b.bn1.running_var.as_slice(),
                    b.bn2.running_mean.as_slice(),
                    b.bn2.running_var.as_slice(),
                ]
            })
            .collect()
    }

    pub fn buffers_mut(&mut self) -> Vec<&mut [T]> {
        self.extractor
            .iter_mut()
            .flat_map(|b| {
                [
                    b.bn1.running_mean.as_mut_slice(),
                    b.bn1.running_var.as_mut_slice(),
                    b.bn2.running_mean.as_mut_slice(),
                    b.bn2.running_var.as_mut_slice(),
                ]
            })
            .collect()
    }

    pub fn trainable_count(&self) -> usize {
        self.trainable().iter().map(|v| v.values.len()).sum()
    }

    /// Scalars held by the shared extractor (independent of channel count).
    pub fn extractor_count(&self) -> usize {
        self.trainable()
            .iter()
            .filter(|v| v.name.starts_with("block"))
            .map(|v| v.values.len())
            .sum()
    }

    /// Element-wise `self += other`; both must come from the same config.
    pub fn accumulate(&mut self, other: &ModelParams<T>) {
        let src = other.trainable();
        for (dst, s) in self.trainable_mut().into_iter().zip(src) {
            debug_assert_eq!(dst.values.len(), s.values.len());
            for (d, &v) in dst.values.iter_mut().zip(s.values) {
                *d += v;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.trainable()
            .iter()
            .all(|v| v.values.iter().all(|x| x.is_finite()))
            && self
                .buffers()
                .iter()
                .all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn cast<U: Real>(&self) -> ModelParams<U> {
        let mut out: ModelParams<U> =
            build_model(&self.config, 0).expect("config validated when self was built");
        for (dst, src) in out.trainable_mut().into_iter().zip(self.trainable()) {
            for (d, s) in dst.values.iter_mut().zip(src.values) {
                *d = U::lit(s.to_f64().unwrap_or(f64::NAN));
            }
        }
        for (dst, src) in out.buffers_mut().into_iter().zip(self.buffers()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = U::lit(s.to_f64().unwrap_or(f64::NAN));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_parameters() {
        let a: ModelParams<f32> = build_model(&ModelConfig::default(), 7).unwrap();
        let b: ModelParams<f32> = build_model(&ModelConfig::default(), 7).unwrap();
        assert_eq!(a, b);
        let c: ModelParams<f32> = build_model(&ModelConfig::default(), 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn initial_state_conventions() {
        let p: ModelParams<f64> = build_model(&ModelConfig::default(), 1).unwrap();
        for v in p.trainable() {
            match v.kind {
                ParamKind::ConvBias | ParamKind::DenseBias | ParamKind::BnBeta => {
                    assert!(v.values.iter().all(|&x| x == 0.0), "{}", v.name)
                }
                ParamKind::BnGamma => assert!(v.values.iter().all(|&x| x == 1.0)),
                _ => assert!(v.values.iter().any(|&x| x != 0.0), "{}", v.name),
            }
        }
        let limit = (6.0f64 / (64.0 + 5.0)).sqrt();
        assert!(p.head_out.weight.iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn bad_config_rejected() {
        let cfg = ModelConfig {
            filters: vec![8, 16],
            ..ModelConfig::default()
        };
        assert!(matches!(
            build_model::<f32>(&cfg, 0),
            Err(ModelError::BadConfig(_))
        ));
    }

    #[test]
    fn extractor_storage_does_not_depend_on_channels() {
        let one: ModelParams<f32> = build_model(
            &ModelConfig {
                n_input_channels: 1,
                ..ModelConfig::default()
            },
            0,
        )
        .unwrap();
        let four: ModelParams<f32> = build_model(&ModelConfig::default(), 0).unwrap();
        assert_eq!(one.extractor_count(), four.extractor_count());
        assert_eq!(four.trainable_count() - one.trainable_count(), 3 * 32 * 64);
    }
}
