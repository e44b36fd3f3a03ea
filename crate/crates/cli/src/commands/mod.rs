pub mod count;
pub mod evaluate;
pub mod predict;
pub mod preprocess;
pub mod train;

use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

use ulw_core::model::ModelConfig;
use ulw_core::training::TrainConfig;

/// Environment variable overriding the training seed.
pub const SEED_ENV: &str = "ULWS_SEED";

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn model_config(path: Option<&Path>) -> Result<Option<ModelConfig>> {
    let Some(path) = path else { return Ok(None) };
    let cfg: ModelConfig = read_json(path)?;
    cfg.validate()?;
    Ok(Some(cfg))
}

pub fn train_config(path: Option<&Path>) -> Result<TrainConfig> {
    let mut cfg = match path {
        Some(p) => read_json(p)?,
        None => TrainConfig::default(),
    };
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.seed = v
            .trim()
            .parse()
            .with_context(|| format!("{SEED_ENV}={v:?} is not an unsigned integer"))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn hex_crc(bytes: &[u8]) -> String {
    format!("{:08x}", ulw_core::preprocess::cache_checksum(bytes))
}
