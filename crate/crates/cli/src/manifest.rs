//! Append-only run manifests. Wall-clock timestamps go to a sibling
//! `.timestamps.jsonl` file so the manifest itself is reproducible.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Serialize)]
pub struct DesignValues {
    pub bn_epsilon: f64,
    pub bn_momentum: f64,
    pub filter_order: usize,
    pub filter_band_hz: [f64; 2],
    pub filter_all_channels: bool,
    pub aggregation: &'static str,
}

impl Default for DesignValues {
    fn default() -> Self {
        Self {
            bn_epsilon: ulw_core::nn::batchnorm::DEFAULT_EPSILON,
            bn_momentum: ulw_core::nn::batchnorm::DEFAULT_MOMENTUM,
            filter_order: 4,
            filter_band_hz: [0.3, 45.0],
            filter_all_channels: false,
            aggregation: "pooled",
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub command_line: Vec<String>,
    pub code_version: &'static str,
    pub config: Value,
    pub seeds: Value,
    pub dataset_checksum: Option<String>,
    pub design: DesignValues,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            command_line: std::env::args().collect(),
            code_version: env!("CARGO_PKG_VERSION"),
            config: Value::Null,
            seeds: Value::Null,
            dataset_checksum: None,
            design: DesignValues::default(),
        }
    }

    /// Appends one JSON line to `path` and a timestamp line to its sibling.
    pub fn append(&self, path: &Path, started: &str) -> Result<()> {
        append_line(path, &serde_json::to_string(self)?)?;
        let stamp = serde_json::json!({
            "command": self.command,
            "started": started,
            "finished": now(),
        });
        append_line(&timestamps_path(path), &stamp.to_string())
    }
}

pub fn timestamps_path(manifest: &Path) -> PathBuf {
    let mut name = manifest.file_name().unwrap_or_default().to_os_string();
    name.push(".timestamps.jsonl");
    manifest.with_file_name(name)
}

/// `<file>.manifest.jsonl` next to an output file.
pub fn beside(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.jsonl");
    output.with_file_name(name)
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .with_context(|| format!("opening {}", path.display()))?;
    writeln!(f, "{line}").with_context(|| format!("writing {}", path.display()))
}
