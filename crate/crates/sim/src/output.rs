//! Output files and the JSON run manifest written next to them.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::Result;

/// Git-style content hash: SHA-256 of `"blob <len>\0"` followed by the bytes.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: usize,
    pub sha256_blob: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<OutputFile>,
    pub wall_time_secs: f64,
    pub notes: Vec<String>,
}

/// `results.csv` → `results.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Sibling path with a suffix before the extension: `a.csv` → `a.summary.csv`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = out.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}{ext}"))
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_file(path: &Path, bytes: &[u8]) -> Result<OutputFile> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)?;
    Ok(OutputFile {
        path: path.display().to_string(),
        bytes: bytes.len(),
        sha256_blob: blob_hash(bytes),
    })
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, outputs: Vec<OutputFile>, wall: Duration) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config: config.clone(),
            outputs,
            wall_time_secs: wall.as_secs_f64(),
            notes: vec![
                "surrogate_sinr_db is evaluated at each algorithm's final position".into(),
                "true_sinr_db uses MVDR weights from a fresh evaluation block at the final position".into(),
            ],
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_file(path, text.as_bytes())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_of_empty_input() {
        // sha256("blob 0\0"), the SHA-256 object id git assigns an empty file.
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn derived_paths() {
        let p = Path::new("out/snr.csv");
        assert_eq!(manifest_path(p), Path::new("out/snr.manifest.json"));
        assert_eq!(sibling(p, "summary"), Path::new("out/snr.summary.csv"));
    }
}
