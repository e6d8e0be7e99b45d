//! Run manifests: the resolved invocation, input digests, outputs and
//! timings. Everything except the timings is reproducible.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const TOOL: &str = "ghostimg";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub invocation: Invocation,
    #[serde(default)]
    pub inputs: Vec<FileDigest>,
    #[serde(default)]
    pub outputs: Vec<FileDigest>,
    #[serde(default)]
    pub roi: Option<RoiEcho>,
    /// Derived values worth keeping next to the outputs (noise sigma, ...).
    #[serde(default)]
    pub derived: BTreeMap<String, String>,
    /// Seconds per stage.
    #[serde(default)]
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest is always serializable")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let m: Manifest = toml::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
        if m.tool != TOOL {
            return Err(CliError::format(path, format!("not a {TOOL} manifest (tool = {:?})", m.tool)));
        }
        Ok(m)
    }
}

/// `path` is relative to the output directory for outputs and absolute for
/// inputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoiEcho {
    pub origin: [usize; 2],
    pub side: usize,
    pub lock_tier: u32,
    pub target_tier: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Invocation {
    GenPatterns {
        top_tier: u32,
        count: u64,
    },
    Acquire {
        config: RunConfig,
    },
    Reconstruct {
        record: PathBuf,
        top_tier: u32,
        mode: String,
        progressive: bool,
        naive: bool,
        snapshot_dir: PathBuf,
        #[serde(default)]
        reference: Option<PathBuf>,
    },
    RoiRun {
        config: RunConfig,
    },
    Diagnose {
        top_tier: u32,
        tiers: Vec<u32>,
    },
    Sweep {
        config: RunConfig,
    },
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    })
}
