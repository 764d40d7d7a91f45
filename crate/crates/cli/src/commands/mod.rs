use std::fs;
use std::path::{Path, PathBuf};

use defectkit_core::io::read_gray;
use defectkit_core::{Error, ModalityId, Origin, Patch, PipelineConfig, Result};
use serde::Serialize;
use serde_json::Value;

pub mod evaluate;
pub mod extract;
pub mod pack;
pub mod report;
pub mod sample;
pub mod synth;

/// Resolved inputs shared by every subcommand.
pub struct Context {
    pub config: PipelineConfig,
    pub out: PathBuf,
}

/// What a subcommand produced: files relative to the output directory plus
/// free-form details for the run manifest.
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub details: Value,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

/// PNG files directly inside `dir`, sorted by name. A missing directory is an error.
pub fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
        let path = entry.map_err(|e| io_err(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")) {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_patch(path: &Path, modality: ModalityId) -> Result<Patch> {
    Patch::new(read_gray(path)?, modality, Origin::new(stem(path), 0, 0))
}

pub fn load_patch_dir(dir: &Path, modality: ModalityId) -> Result<Vec<Patch>> {
    let paths = list_pngs(dir)?;
    if paths.is_empty() {
        return Err(Error::InvalidInput(format!("{} holds no PNG files", dir.display())));
    }
    paths.iter().map(|p| load_patch(p, modality)).collect()
}

pub fn seed_path_string(path: &[u64]) -> String {
    path.iter().map(u64::to_string).collect::<Vec<_>>().join("/")
}
