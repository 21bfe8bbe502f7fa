//! Optional JSON config file for `decode`, mirroring the fusion
//! hyperparameters and paths. Precedence: flags override the config file,
//! the config file overrides built-in defaults. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_K: usize = 1024;
pub const DEFAULT_N: usize = 10;
pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_LAMBDA: f64 = 0.25;
pub const DEFAULT_T: f64 = 5.0;
pub const DEFAULT_FRAME_MS: f64 = 40.0;
pub const DEFAULT_THREADS: usize = 1;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeConfigFile {
    pub mode: Option<String>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    pub t: Option<f64>,
    pub frame_ms: Option<f64>,
    pub threads: Option<usize>,
    pub manifest: Option<PathBuf>,
    pub vocab: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub store_cn: Option<PathBuf>,
    pub store_en: Option<PathBuf>,
    pub store_all: Option<PathBuf>,
}

impl DecodeConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::usage_in(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::usage_in(path, e))
    }
}
