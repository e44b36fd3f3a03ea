use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::nn::batchnorm::{DEFAULT_EPSILON, DEFAULT_MOMENTUM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConvType {
    Separable,
    Standard,
}

impl std::str::FromStr for ConvType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "separable" | "sep" => Ok(Self::Separable),
            "standard" | "std" => Ok(Self::Standard),
            other => Err(format!(
                "unknown conv type {other:?} (expected separable|standard)"
            )),
        }
    }
}

/// Architecture hyperparameters.
///
/// `pool_size` is the max-pool window; `pool_stride` is the downsampling
/// factor shared by both pools of a block and by both shortcut convolutions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub n_blocks: usize,
    pub kernel_size: usize,
    pub pool_size: usize,
    pub pool_stride: usize,
    pub filters: Vec<usize>,
    pub conv_type: ConvType,
    pub n_input_channels: usize,
    pub input_length: usize,
    pub head_hidden: usize,
    pub n_classes: usize,
    pub dropout_block: f64,
    pub dropout_head: f64,
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            n_blocks: 3,
            kernel_size: 3,
            pool_size: 2,
            pool_stride: 2,
            filters: vec![8, 16, 32],
            conv_type: ConvType::Separable,
            n_input_channels: 4,
            input_length: 3000,
            head_hidden: 64,
            n_classes: 5,
            dropout_block: 0.1,
            dropout_head: 0.3,
            bn_epsilon: DEFAULT_EPSILON,
            bn_momentum: DEFAULT_MOMENTUM,
        }
    }
}

/// Named variants of the default architecture used in the ablation study.
pub const PRESETS: &[&str] = &[
    "default",
    "blocks-2",
    "blocks-4",
    "ks7-ps4",
    "filters-4-8-16",
    "filters-16-32-64",
    "filters-16-32-64-128",
    "standard-conv",
];

impl ModelConfig {
    pub fn with_filters(filters: &[usize]) -> Self {
        Self {
            n_blocks: filters.len(),
            filters: filters.to_vec(),
            ..Self::default()
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        let cfg = match name {
            "default" => Self::default(),
            "blocks-2" => Self::with_filters(&[16, 32]),
            "blocks-4" => Self::with_filters(&[8, 16, 32, 64]),
            "ks7-ps4" => Self {
                kernel_size: 7,
                pool_size: 4,
                ..Self::default()
            },
            "filters-4-8-16" => Self::with_filters(&[4, 8, 16]),
            "filters-16-32-64" => Self::with_filters(&[16, 32, 64]),
            "filters-16-32-64-128" => Self::with_filters(&[16, 32, 64, 128]),
            "standard-conv" => Self {
                conv_type: ConvType::Standard,
                ..Self::default()
            },
            _ => return None,
        };
        Some(cfg)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::BadConfig(msg));
        if self.n_blocks == 0 {
            return bad("n_blocks must be at least 1".into());
        }
        if self.filters.len() != self.n_blocks {
            return bad(format!(
                "{} filter counts given for {} blocks",
                self.filters.len(),
                self.n_blocks
            ));
        }
        if self.filters.contains(&0) {
            return bad("filter counts must be positive".into());
        }
        if self.filters.windows(2).any(|w| w[1] <= w[0]) {
            return bad(format!(
                "filters must be strictly increasing, got {:?}",
                self.filters
            ));
        }
        if self.kernel_size == 0 || self.pool_size == 0 || self.pool_stride == 0 {
            return bad("kernel_size, pool_size and pool_stride must be positive".into());
        }
        if self.n_input_channels == 0 || self.input_length == 0 {
            return bad("n_input_channels and input_length must be positive".into());
        }
        if self.head_hidden == 0 {
            return bad("head_hidden must be positive".into());
        }
        if self.n_classes != 5 {
            return bad(format!("n_classes must be 5, got {}", self.n_classes));
        }
        for (name, rate) in [
            ("dropout_block", self.dropout_block),
            ("dropout_head", self.dropout_head),
        ] {
            if !(0.0..1.0).contains(&rate) {
                return bad(format!("{name} must lie in [0, 1), got {rate}"));
            }
        }
        if self.bn_epsilon.is_nan()
            || self.bn_epsilon <= 0.0
            || !(0.0..1.0).contains(&self.bn_momentum)
        {
            return bad("bn_epsilon must be positive and bn_momentum in [0, 1)".into());
        }
        Ok(())
    }

    pub fn last_filters(&self) -> usize {
        *self.filters.last().unwrap_or(&0)
    }

    /// Width of the concatenated per-channel feature vector.
    pub fn feature_width(&self) -> usize {
        self.n_input_channels * self.last_filters()
    }

    /// Temporal length entering global average pooling.
    pub fn pooled_length(&self, input_length: usize) -> usize {
        (0..2 * self.n_blocks).fold(input_length, |l, _| l.div_ceil(self.pool_stride))
    }
}
