//! Optional TOML experiment configuration. Command-line flags take
//! precedence over every field here.
//!
//! ```toml
//! seed = 7
//! failed = [0, 1]
//! helpers = [2, 3]
//!
//! [params]
//! n = 4
//! k = 1
//! d = 2
//! h = 2
//! p = 5
//!
//! [output]
//! dir = "store"
//! csv = "metrics.csv"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub d: Option<usize>,
    pub h: Option<usize>,
    pub p: Option<u64>,
    pub lambdas: Option<Vec<u64>>,
    pub mus: Option<Vec<u64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub transcript: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub params: ParamsConfig,
    pub failed: Option<Vec<usize>>,
    pub helpers: Option<Vec<usize>>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load_optional(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }
}
