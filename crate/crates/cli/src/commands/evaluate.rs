use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use ulw_core::complexity::count_flops;
use ulw_core::evaluation::{aggregate_folds, confusion_of_rows, read_predictions};

use super::model_config;
use crate::manifest::{now, RunManifest};
use crate::EvaluateArgs;

const SUFFIX: &str = ".predictions.csv";

/// Fold index encoded in a `fold<i>.predictions.csv` file name.
fn fold_index(path: &Path) -> Option<usize> {
    let name = path.file_name()?.to_str()?;
    name.strip_suffix(SUFFIX)?
        .strip_prefix("fold")?
        .parse()
        .ok()
}

fn collect(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = std::fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.to_string_lossy().ends_with(SUFFIX))
                .collect();
            found.sort();
            files.extend(found);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            bail!("{} does not exist", p.display());
        }
    }
    Ok(files)
}

pub fn run(args: &EvaluateArgs) -> Result<()> {
    let started = now();
    let files = collect(&args.predictions)?;
    if files.is_empty() {
        bail!("no prediction files found");
    }
    if args.strict {
        let by_fold: BTreeMap<usize, &PathBuf> = files
            .iter()
            .filter_map(|f| fold_index(f).map(|i| (i, f)))
            .collect();
        let expected = match args.folds {
            Some(k) => k,
            None => by_fold.keys().next_back().map_or(0, |m| m + 1),
        };
        let missing: Vec<usize> = (0..expected).filter(|i| !by_fold.contains_key(i)).collect();
        if !missing.is_empty() {
            bail!("missing prediction files for fold(s) {missing:?}");
        }
    }

    let mut matrices = Vec::with_capacity(files.len());
    for f in &files {
        let rows =
            read_predictions(File::open(f).with_context(|| format!("opening {}", f.display()))?)
                .with_context(|| format!("reading {}", f.display()))?;
        matrices
            .push(confusion_of_rows(&rows).with_context(|| format!("scoring {}", f.display()))?);
    }
    let mut report = aggregate_folds(&matrices)?;
    let mcfg = model_config(args.model_config.as_deref())?;
    if let Some(cfg) = &mcfg {
        let c = count_flops(cfg, cfg.input_length)?;
        report.params = Some(c.total_params);
        report.flops = Some(c.total_flops);
    }
    print!("{}", report.to_table());
    println!("{}", serde_json::to_string_pretty(&report)?);

    if let Some(path) = &args.manifest {
        let mut m = RunManifest::new("evaluate");
        m.config = serde_json::json!({
            "files": files,
            "strict": args.strict,
            "folds": args.folds,
            "model": mcfg,
        });
        m.append(path, &started)?;
    }
    Ok(())
}
