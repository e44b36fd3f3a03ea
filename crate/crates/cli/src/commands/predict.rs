use std::fs::File;
use std::io::BufWriter;

use anyhow::{Context, Result};

use ulw_core::evaluation::{write_predictions, PredictionRow};
use ulw_core::model::decode_checkpoint;
use ulw_core::preprocess::decode_cache;
use ulw_core::training::predict_indices;

use super::hex_crc;
use crate::manifest::{beside, now, RunManifest};
use crate::PredictArgs;

pub fn run(args: &PredictArgs) -> Result<()> {
    let started = now();
    let ckpt = std::fs::read(&args.checkpoint)
        .with_context(|| format!("reading {}", args.checkpoint.display()))?;
    let params = decode_checkpoint(&ckpt)
        .with_context(|| format!("loading {}", args.checkpoint.display()))?;
    let bytes =
        std::fs::read(&args.cache).with_context(|| format!("reading {}", args.cache.display()))?;
    let dataset =
        decode_cache(&bytes).with_context(|| format!("loading cache {}", args.cache.display()))?;

    let all: Vec<usize> = (0..dataset.len()).collect();
    let probs = predict_indices(&params, &dataset, &all)?;
    let rows: Vec<PredictionRow> = all
        .iter()
        .map(|&i| {
            PredictionRow::new(
                i,
                &dataset.subject_keys[i],
                dataset.y[i].index(),
                probs.row(i),
            )
        })
        .collect();
    let out =
        File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_predictions(BufWriter::new(out), &rows)?;
    println!("predicted {} epochs", rows.len());

    let mut m = RunManifest::new("predict");
    m.config = serde_json::json!({ "model": params.config, "checkpoint_crc32": hex_crc(&ckpt) });
    m.dataset_checksum = Some(hex_crc(&bytes));
    m.append(&beside(&args.out), &started)
}
