//! `manifest.json`: what was encoded, chunk checksums and the failed set.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";
pub const QUARANTINE_DIR: &str = "quarantine";
pub const TRANSCRIPT_FILE: &str = "transcript.txt";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub h: usize,
    pub p: u32,
    pub lambdas: Vec<u32>,
    pub mus: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChunkEntry {
    pub node: usize,
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub params: ManifestParams,
    pub original_len: usize,
    pub stripes: usize,
    pub symbols_per_byte: u32,
    pub input_sha256: String,
    pub chunks: Vec<ChunkEntry>,
    #[serde(default)]
    pub failed: Vec<usize>,
}

impl Manifest {
    pub fn path(dir: &Path) -> PathBuf {
        dir.join(MANIFEST_FILE)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let path = Self::path(dir);
        let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = Self::path(dir);
        let text = serde_json::to_string_pretty(self)?;
        fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn entry(&self, node: usize) -> Option<&ChunkEntry> {
        self.chunks.iter().find(|c| c.node == node)
    }
}

pub fn chunk_name(node: usize) -> String {
    format!("node_{node}.chunk")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
