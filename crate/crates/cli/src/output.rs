//! Artifact directories, crash-safe writes and the run manifest.

use crate::config::Config;
use crate::error::CliError;
use crate::experiments::CsvFile;
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

/// Environment variable naming the output root.
pub const OUT_ENV: &str = "JOMA_OUT";
pub const DEFAULT_OUT: &str = "out";
pub const MANIFEST: &str = "manifest.json";

pub fn out_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from)
}

pub fn run_dir(root: &Path, config: &Config) -> PathBuf {
    root.join(config.id().name()).join(config.seed().to_string())
}

/// Writes `bytes` to a sibling temp file, syncs it and renames it over
/// `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: Config,
    pub seed: u64,
    pub version: String,
    pub files: Vec<String>,
    pub wall_clock_secs: f64,
}

impl RunManifest {
    pub fn new(config: &Config, files: &[CsvFile], wall_clock_secs: f64) -> Self {
        Self {
            experiment: config.id().name().into(),
            config: config.clone(),
            seed: config.seed(),
            version: env!("CARGO_PKG_VERSION").into(),
            files: files.iter().map(|f| f.name.clone()).collect(),
            wall_clock_secs,
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        Ok(serde_json::from_slice(&fs::read(path)?)?)
    }
}

/// Writes every CSV, then the manifest.
pub fn write_run(dir: &Path, files: &[CsvFile], manifest: &RunManifest) -> Result<(), CliError> {
    for f in files {
        write_atomic(&dir.join(&f.name), &f.to_bytes())?;
    }
    let mut json = serde_json::to_vec_pretty(manifest)?;
    json.push(b'\n');
    write_atomic(&dir.join(MANIFEST), &json)
}
