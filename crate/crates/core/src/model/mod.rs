//! The dual-stream separable-convolution classifier.

pub mod checkpoint;
pub mod config;
pub mod network;
pub mod params;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint};
pub use config::{ConvType, ModelConfig, PRESETS};
pub use network::{
    dssc_backward, dssc_forward, extractor_backward, extractor_forward, model_backward,
    model_backward_logits, model_forward, predict, update_running_stats, DsscCache, ExtractorCache,
    ModelCache,
};
pub use params::{
    build_model, ConvLayer, DsscParams, ModelParams, ParamKind, ParamView, ParamViewMut,
};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("bad model config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("not a model checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u8, found: u8 },
    #[error("checkpoint checksum mismatch")]
    ChecksumMismatch,
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
