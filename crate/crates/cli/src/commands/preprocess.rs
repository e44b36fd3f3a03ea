use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use ulw_core::edf::load_record;
use ulw_core::preprocess::{
    encode_cache, preprocess_record, EpochDataset, PreprocessOptions, RecordSummary, EPOCH_SAMPLES,
};

use super::hex_crc;
use crate::errors;
use crate::manifest::{beside, now, RunManifest};
use crate::PreprocessArgs;

const PSG_SUFFIX: &str = "-psg.edf";
const HYP_SUFFIX: &str = "-hypnogram.edf";

/// Files pair up by the first six characters of their names (`SC4ssN`).
fn pair_key(name: &str) -> String {
    name.chars().take(6).collect()
}

struct Scan {
    pairs: Vec<(PathBuf, PathBuf)>,
    unpaired: Vec<PathBuf>,
}

fn scan(dir: &Path) -> Result<Scan> {
    let mut psg = BTreeMap::new();
    let mut hyp: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    entries.sort();
    for path in entries {
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(PSG_SUFFIX) {
            psg.insert(path.clone(), pair_key(name));
        } else if lower.ends_with(HYP_SUFFIX) {
            hyp.entry(pair_key(name)).or_default().push(path);
        }
    }
    let mut pairs = Vec::new();
    let mut unpaired = Vec::new();
    for (path, key) in psg {
        match hyp
            .get_mut(&key)
            .and_then(|v| (!v.is_empty()).then(|| v.remove(0)))
        {
            Some(h) => pairs.push((path, h)),
            None => unpaired.push(path),
        }
    }
    unpaired.extend(hyp.into_values().flatten());
    Ok(Scan { pairs, unpaired })
}

pub fn run(args: &PreprocessArgs) -> Result<()> {
    let started = now();
    let found = scan(&args.data_dir)?;
    if found.pairs.is_empty() && found.unpaired.is_empty() {
        bail!("no records found in {}", args.data_dir.display());
    }
    let mut skipped = 0usize;
    for p in &found.unpaired {
        eprintln!(
            "warning: {} has no matching PSG/hypnogram partner; skipped",
            p.display()
        );
        skipped += 1;
    }

    let opts = PreprocessOptions {
        filter_all_channels: args.filter_all_channels,
        ..PreprocessOptions::default()
    };
    let mut done: Vec<(EpochDataset, RecordSummary)> = Vec::new();
    for (psg, hyp) in &found.pairs {
        let result = load_record(psg, hyp, &args.channels)
            .map_err(anyhow::Error::from)
            .and_then(|r| {
                preprocess_record(&r, &args.channels, &opts).map_err(anyhow::Error::from)
            });
        match result {
            Ok(ok) => done.push(ok),
            Err(e) => {
                let name = psg.file_name().unwrap_or_default().to_string_lossy();
                eprintln!("warning: skipped {name}: {}", errors::render(&e));
                skipped += 1;
            }
        }
    }
    done.sort_by(|a, b| (&a.1.subject_key, a.1.night).cmp(&(&b.1.subject_key, b.1.night)));

    let mut dataset = EpochDataset::empty(args.channels.clone(), EPOCH_SAMPLES);
    for (d, s) in &done {
        println!(
            "{} night {}: {} signal epochs, {} labeled, {} excluded, {} retained",
            s.subject_key,
            s.night,
            s.signal_epochs,
            s.labeled_epochs,
            s.excluded_epochs,
            s.retained_epochs
        );
        dataset.append(d.clone())?;
    }
    println!("records: {}", done.len());
    println!("epochs: {}", dataset.len());
    println!("skipped: {skipped}");
    if done.is_empty() {
        bail!("no records could be processed");
    }

    let bytes = encode_cache(&dataset)?;
    std::fs::write(&args.out, &bytes).with_context(|| format!("writing {}", args.out.display()))?;

    let mut m = RunManifest::new("preprocess");
    m.config = serde_json::json!({
        "channels": args.channels,
        "records": done.iter().map(|(_, s)| s).collect::<Vec<_>>(),
        "skipped": skipped,
    });
    m.dataset_checksum = Some(hex_crc(&bytes));
    m.design.filter_all_channels = args.filter_all_channels;
    let path = args.manifest.clone().unwrap_or_else(|| beside(&args.out));
    m.append(&path, &started)
}
