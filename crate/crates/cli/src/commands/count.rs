use anyhow::{anyhow, Result};

use ulw_core::complexity::count_flops;
use ulw_core::model::{ConvType, ModelConfig, PRESETS};

use super::model_config;
use crate::manifest::{now, RunManifest};
use crate::CountArgs;

fn resolve(args: &CountArgs) -> Result<ModelConfig> {
    let mut cfg = match (model_config(args.config.as_deref())?, &args.preset) {
        (Some(cfg), _) => cfg,
        (None, Some(name)) => ModelConfig::preset(name)
            .ok_or_else(|| anyhow!("unknown preset {name:?}; known: {}", PRESETS.join(", ")))?,
        (None, None) => ModelConfig::default(),
    };
    if let Some(ct) = &args.conv_type {
        cfg.conv_type = ct.parse::<ConvType>().map_err(|e| anyhow!(e))?;
    }
    if let Some(f) = &args.filters {
        cfg.filters = f.clone();
        cfg.n_blocks = f.len();
    }
    if let Some(k) = args.kernel_size {
        cfg.kernel_size = k;
    }
    if let Some(p) = args.pool_size {
        cfg.pool_size = p;
    }
    if let Some(s) = args.pool_stride {
        cfg.pool_stride = s;
    }
    if let Some(c) = args.input_channels {
        cfg.n_input_channels = c;
    }
    if let Some(t) = args.input_length {
        cfg.input_length = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(args: &CountArgs) -> Result<()> {
    let started = now();
    let cfg = resolve(args)?;
    let report = count_flops(&cfg, cfg.input_length)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print!("{}", report.to_text());
    }
    if let Some(path) = &args.manifest {
        let mut m = RunManifest::new("count");
        m.config = serde_json::json!({ "model": cfg });
        m.append(path, &started)?;
    }
    Ok(())
}
