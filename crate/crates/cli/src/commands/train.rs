use std::fs::File;
use std::io::{BufWriter, Write};

use anyhow::{bail, Context, Result};

use ulw_core::evaluation::{write_predictions, PredictionRow};
use ulw_core::model::{encode_checkpoint, ModelConfig};
use ulw_core::preprocess::decode_cache;
use ulw_core::training::{split_indices, subject_folds, train_fold, TrainConfig};

use super::{hex_crc, model_config, train_config};
use crate::manifest::{now, RunManifest};
use crate::TrainArgs;

pub fn run(args: &TrainArgs) -> Result<()> {
    let started = now();
    let bytes =
        std::fs::read(&args.cache).with_context(|| format!("reading {}", args.cache.display()))?;
    let dataset =
        decode_cache(&bytes).with_context(|| format!("loading cache {}", args.cache.display()))?;
    let tcfg = train_config(args.train_config.as_deref())?;
    let mcfg = match model_config(args.model_config.as_deref())? {
        Some(cfg) => cfg,
        None => ModelConfig {
            n_input_channels: dataset.n_channels(),
            input_length: dataset.epoch_len(),
            ..ModelConfig::default()
        },
    };

    let splits = subject_folds(&dataset.subject_keys, args.folds, tcfg.seed)?;
    let selected: Vec<usize> = if args.fold == "all" {
        (0..args.folds).collect()
    } else {
        let i: usize = args
            .fold
            .parse()
            .with_context(|| format!("--fold {:?} is neither an index nor \"all\"", args.fold))?;
        if i >= args.folds {
            bail!("--fold {i} is out of range for {} folds", args.folds);
        }
        vec![i]
    };
    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;

    let mut fold_seeds = Vec::new();
    for &i in &selected {
        let split = &splits[i];
        let fold_cfg = TrainConfig {
            seed: tcfg.seed.wrapping_add(i as u64),
            ..tcfg.clone()
        };
        fold_seeds.push(fold_cfg.seed);
        let (train_idx, test_idx) = split_indices(&dataset, split)?;
        eprintln!(
            "fold {i}: {} train epochs ({} subjects), {} test epochs ({} subjects)",
            train_idx.len(),
            split.train_subjects.len(),
            test_idx.len(),
            split.test_subjects.len()
        );
        let outcome =
            train_fold(&dataset, split, &mcfg, &fold_cfg).with_context(|| format!("fold {i}"))?;

        let stem = args.out.join(format!("fold{i}"));
        std::fs::write(
            stem.with_extension("ckpt"),
            encode_checkpoint(&outcome.params),
        )?;
        let mut hist = BufWriter::new(File::create(stem.with_extension("history.jsonl"))?);
        for h in &outcome.history {
            writeln!(hist, "{}", serde_json::to_string(h)?)?;
            eprintln!(
                "fold {i} epoch {}: lr {:.3e} loss {:.4} test acc {:.4}",
                h.epoch, h.lr, h.train_loss, h.test_acc
            );
        }
        hist.flush()?;
        let rows: Vec<PredictionRow> = outcome
            .test_indices
            .iter()
            .enumerate()
            .map(|(r, &idx)| {
                PredictionRow::new(
                    idx,
                    &dataset.subject_keys[idx],
                    dataset.y[idx].index(),
                    outcome.test_probs.row(r),
                )
            })
            .collect();
        write_predictions(File::create(stem.with_extension("predictions.csv"))?, &rows)?;
        let acc = outcome.history.last().map_or(f64::NAN, |h| h.test_acc);
        println!(
            "fold {i}: test epochs {}, final test accuracy {acc:.4}",
            rows.len()
        );
    }

    let mut m = RunManifest::new("train");
    m.config = serde_json::json!({
        "model": mcfg,
        "train": tcfg,
        "folds": args.folds,
        "fold": args.fold,
        "splits": selected.iter().map(|&i| &splits[i]).collect::<Vec<_>>(),
    });
    m.seeds = serde_json::json!({ "base": tcfg.seed, "split": tcfg.seed, "folds": fold_seeds });
    m.dataset_checksum = Some(hex_crc(&bytes));
    m.design.bn_epsilon = mcfg.bn_epsilon;
    m.design.bn_momentum = mcfg.bn_momentum;
    m.append(&args.out.join("manifest.jsonl"), &started)
}
