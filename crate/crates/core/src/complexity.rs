//! Closed-form parameter and FLOPs accounting.
//!
//! Parameters count trainable scalars only: a separable convolution holds
//! `K·M + M·N + N`, a standard one `K·M·N + N`, batch norm `2·N` (running
//! statistics excluded), and the shared extractor is counted once.
//!
//! FLOPs follow [`FLOPS_CONVENTION`] for a single forward pass of one epoch
//! through every input channel plus the head.

use serde::Serialize;

use crate::model::{ConvType, ModelConfig, ModelError};

pub const FLOPS_CONVENTION: &str = "2 FLOPs per multiply-accumulate in conv/dense layers; \
+1 per output element for bias; 2 per element for inference-form batch norm; \
1 per element for ReLU; (pool_size - 1) per output element for max pooling; \
1 per element for the residual add; L + 1 per feature for global average pooling; \
one forward pass of one epoch over all input channels plus the head";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LayerRow {
    pub layer: String,
    pub params: u64,
    pub flops: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComplexityReport {
    pub rows: Vec<LayerRow>,
    pub total_params: u64,
    pub total_flops: u64,
    pub convention: String,
}

impl ComplexityReport {
    fn from_rows(rows: Vec<LayerRow>, convention: &str) -> Self {
        let total_params = rows.iter().map(|r| r.params).sum();
        let total_flops = rows.iter().map(|r| r.flops).sum();
        Self {
            rows,
            total_params,
            total_flops,
            convention: convention.to_string(),
        }
    }

    /// Aligned text table; the final line is `total_params <n>`.
    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.layer.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!("{:<width$}  {:>10}  {:>12}\n", "layer", "params", "flops");
        for r in &self.rows {
            out.push_str(&format!(
                "{:<width$}  {:>10}  {:>12}\n",
                r.layer, r.params, r.flops
            ));
        }
        out.push_str(&format!("convention {}\n", self.convention));
        out.push_str(&format!("total_flops {}\n", self.total_flops));
        out.push_str(&format!("total_params {}\n", self.total_params));
        out
    }
}

struct Conv {
    params: u64,
    flops: u64,
    out_len: u64,
}

fn conv_cost(conv_type: ConvType, k: u64, m: u64, n: u64, len: u64, stride: u64) -> Conv {
    let out_len = len.div_ceil(stride);
    let (params, macs) = match conv_type {
        ConvType::Separable => (k * m + m * n + n, (k * m + m * n) * out_len),
        ConvType::Standard => (k * m * n + n, k * m * n * out_len),
    };
    Conv {
        params,
        flops: 2 * macs + n * out_len,
        out_len,
    }
}

fn build_rows(config: &ModelConfig, input_length: usize) -> Vec<LayerRow> {
    let ct = config.conv_type;
    let channels = config.n_input_channels as u64;
    let k = config.kernel_size as u64;
    let window = config.pool_size as u64;
    let stride = config.pool_stride as u64;
    let mut rows = Vec::new();
    let mut push = |layer: String, params: u64, flops_per_channel: u64| {
        rows.push(LayerRow {
            layer,
            params,
            flops: flops_per_channel * channels,
        })
    };

    let mut len = input_length as u64;
    let mut m = 1u64;
    for (i, &f) in config.filters.iter().enumerate() {
        let f = f as u64;
        let name = |s: &str| format!("block{}.{s}", i + 1);

        let c1 = conv_cost(ct, k, m, f, len, 1);
        push(name("main_conv1"), c1.params, c1.flops);
        let l1 = c1.out_len;
        push(name("bn1"), 2 * f, 2 * f * l1);
        push(name("relu1"), 0, f * l1);
        let l2 = l1.div_ceil(stride);
        push(name("pool1"), 0, (window - 1) * f * l2);

        let c2 = conv_cost(ct, k, f, f, l2, 1);
        push(name("main_conv2"), c2.params, c2.flops);
        push(name("bn2"), 2 * f, 2 * f * l2);
        push(name("relu2"), 0, f * l2);
        let l3 = l2.div_ceil(stride);
        push(name("pool2"), 0, (window - 1) * f * l3);

        let s1 = conv_cost(ct, 1, m, f, len, stride);
        push(name("shortcut_conv1"), s1.params, s1.flops);
        let s2 = conv_cost(ct, 1, f, f, s1.out_len, stride);
        push(name("shortcut_conv2"), s2.params, s2.flops);
        debug_assert_eq!(s2.out_len, l3);
        push(name("add"), 0, f * l3);

        len = l3;
        m = f;
    }
    push("global_avg_pool".into(), 0, m * (len + 1));

    let features = channels * m;
    let hidden = config.head_hidden as u64;
    let classes = config.n_classes as u64;
    rows.push(LayerRow {
        layer: "head_hidden".into(),
        params: features * hidden + hidden,
        flops: 2 * features * hidden + hidden,
    });
    rows.push(LayerRow {
        layer: "head_relu".into(),
        params: 0,
        flops: hidden,
    });
    rows.push(LayerRow {
        layer: "head_out".into(),
        params: hidden * classes + classes,
        flops: 2 * hidden * classes + classes,
    });
    rows
}

/// Trainable parameters per layer; FLOPs columns are zero.
pub fn count_params(config: &ModelConfig) -> Result<ComplexityReport, ModelError> {
    config.validate()?;
    let rows = build_rows(config, config.input_length)
        .into_iter()
        .map(|r| LayerRow { flops: 0, ..r })
        .collect();
    Ok(ComplexityReport::from_rows(
        rows,
        "trainable parameters only",
    ))
}

/// Parameters and FLOPs per layer for an input of `input_length` samples.
pub fn count_flops(
    config: &ModelConfig,
    input_length: usize,
) -> Result<ComplexityReport, ModelError> {
    config.validate()?;
    if input_length == 0 {
        return Err(ModelError::BadConfig(
            "input length must be positive".into(),
        ));
    }
    Ok(ComplexityReport::from_rows(
        build_rows(config, input_length),
        FLOPS_CONVENTION,
    ))
}

/// Cost of a separable relative to a standard convolution,
/// `(K·M + M·N) / (K·M·N) = 1/N + 1/K`.
pub fn separable_ratio(kernel_size: usize, out_channels: usize) -> f64 {
    let (k, n) = (kernel_size as f64, out_channels as f64);
    (k + n) / (k * n)
}
