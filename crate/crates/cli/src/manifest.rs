//! Run manifests: resolved configuration, seeds, versions and output digests.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const RESOLVED_FILE: &str = "resolved.cfg";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    /// Relative to the output directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub fracsp: String,
    pub field_format: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seeds {
    pub run: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
    pub threads: usize,
    pub seeds: Seeds,
    pub versions: Versions,
    pub exit_code: i32,
    pub outputs: Vec<OutputDigest>,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, exit_code: i32, outputs: Vec<OutputDigest>) -> Self {
        Self {
            command: command.to_string(),
            config: config.clone(),
            threads: config.run.threads,
            seeds: Seeds { run: config.run.seed },
            versions: Versions {
                fracsp: env!("CARGO_PKG_VERSION").to_string(),
                field_format: format!("FLD1 v{}", fracsp::io::VERSION),
            },
            exit_code,
            outputs,
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::format(format!("{}: {e}", path.display())))
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf, CliError> {
        let path = dir.join(MANIFEST_FILE);
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::format(e.to_string()))?;
        fs::write(&path, json + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(path)
    }
}

pub fn digest_file(dir: &Path, path: &Path) -> Result<OutputDigest, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let rel = path.strip_prefix(dir).unwrap_or(path);
    let rel = rel
        .components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/");
    Ok(OutputDigest {
        path: rel,
        bytes: bytes.len() as u64,
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

/// Outputs whose digest differs from `expected` or is missing from `actual`.
pub fn mismatches(expected: &[OutputDigest], actual: &[OutputDigest]) -> Vec<String> {
    expected
        .iter()
        .filter_map(|e| match actual.iter().find(|a| a.path == e.path) {
            Some(a) if a == e => None,
            Some(_) => Some(format!("{}: digest differs", e.path)),
            None => Some(format!("{}: not produced", e.path)),
        })
        .collect()
}
