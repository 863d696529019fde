//! Run manifests: what was run, with which settings, on which files.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};
use crate::format::{write_json, PrngFile};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Fully resolved settings; `--config` accepts this file and reruns the
    /// command.
    pub config: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prng: Option<PrngFile>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0.0, |d| d.as_secs_f64())
}

/// Collects digests while a command runs.
pub struct ManifestBuilder {
    command: String,
    config: serde_json::Value,
    prng: Option<PrngFile>,
    started: f64,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl ManifestBuilder {
    pub fn new<C: Serialize>(command: &str, config: &C, seed: Option<u64>) -> CliResult<Self> {
        Ok(Self {
            command: command.to_string(),
            config: serde_json::to_value(config).map_err(|e| CliError::Usage(e.to_string()))?,
            prng: seed.map(|seed| PrngFile {
                name: jumpmeans::simulate::PRNG_NAME.to_string(),
                seed,
            }),
            started: unix_now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> CliResult<Vec<u8>> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(&bytes),
        });
        Ok(bytes)
    }

    pub fn output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.push(FileDigest {
            path: path.to_path_buf(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn finish(self, path: &Path) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            tool: "jumpmeans".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            config: self.config,
            prng: self.prng,
            started_unix: self.started,
            finished_unix: unix_now(),
            inputs: self.inputs,
            outputs: self.outputs,
        };
        write_json(path, &manifest)?;
        Ok(manifest)
    }
}

/// Manifest path next to a single output file: `out.json` gets
/// `out.manifest.json`.
pub fn sidecar(path: &Path) -> PathBuf {
    let stem = path.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    path.with_file_name(format!("{stem}.manifest.json"))
}
