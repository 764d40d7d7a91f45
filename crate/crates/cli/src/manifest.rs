use std::fs;
use std::path::{Path, PathBuf};

use defectkit_core::synth::MODEL_VERSION;
use defectkit_core::{Error, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const FILE_NAME: &str = "run_manifest.json";

#[derive(Debug, Serialize)]
struct OutputRecord {
    path: String,
    bytes: u64,
    sha256: String,
}

/// Provenance for one run. Deliberately free of timestamps and host data so
/// identical runs produce identical manifests.
#[derive(Debug, Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    argv: &'a [String],
    seed: u64,
    config_hash: &'a str,
    config_source: String,
    synthesis_model: &'static str,
    details: &'a Value,
    outputs: Vec<OutputRecord>,
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub argv: &'a [String],
    pub seed: u64,
    pub config_hash: &'a str,
    pub config_path: Option<&'a Path>,
}

fn digest(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).map_err(|e| Error::Io { path: path.to_path_buf(), source: e })?;
    let hex = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
    Ok((bytes.len() as u64, hex))
}

/// Writes `run_manifest.json` into `out`. `outputs` are relative to `out`.
pub fn write(out: &Path, info: &RunInfo<'_>, outputs: &[PathBuf], details: &Value) -> Result<PathBuf> {
    let mut records = Vec::with_capacity(outputs.len());
    for rel in outputs {
        let (bytes, sha256) = digest(&out.join(rel))?;
        let path = rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/");
        records.push(OutputRecord { path, bytes, sha256 });
    }
    records.sort_by(|a, b| a.path.cmp(&b.path));
    let manifest = RunManifest {
        tool: "defectkit",
        version: env!("CARGO_PKG_VERSION"),
        command: info.command,
        argv: info.argv,
        seed: info.seed,
        config_hash: info.config_hash,
        config_source: info.config_path.map_or_else(|| "defaults".to_string(), |p| p.display().to_string()),
        synthesis_model: MODEL_VERSION,
        details,
        outputs: records,
    };
    let path = out.join(FILE_NAME);
    crate::commands::write_json(&path, &manifest)?;
    Ok(path)
}
