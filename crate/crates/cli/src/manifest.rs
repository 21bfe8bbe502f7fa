//! JSON Lines manifests and decode outputs.
//!
//! Manifest entries reference tensor files by path relative to the manifest
//! file's directory. `lang_frames` holds one `0` (Chinese) or `1` (English)
//! per frame and may be absent for externally produced manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub id: String,
    pub embeddings: String,
    pub logits: String,
    pub reference: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lang_frames: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypEntry {
    pub id: String,
    pub hyp: String,
}

/// Timing sidecar line written next to decode output.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingEntry {
    pub id: String,
    pub wall_seconds: f64,
    pub audio_seconds: f64,
    pub fallback_frames: u64,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::usage_in(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: T = serde_json::from_str(line).map_err(|e| {
            CliError::data_in(path, format!("line {}: {e}", lineno + 1))
        })?;
        out.push(entry);
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    read_jsonl(path)
}

pub fn read_hyps(path: &Path) -> Result<Vec<HypEntry>> {
    read_jsonl(path)
}

pub fn read_timings(path: &Path) -> Result<Vec<TimingEntry>> {
    read_jsonl(path)
}

pub fn write_jsonl<T: Serialize>(path: &Path, entries: &[T]) -> Result<()> {
    let mut out = Vec::new();
    for entry in entries {
        serde_json::to_writer(&mut out, entry)
            .map_err(|e| CliError::data_in(path, e))?;
        out.push(b'\n');
    }
    let mut file = std::fs::File::create(path).map_err(|e| CliError::usage_in(path, e))?;
    file.write_all(&out).map_err(|e| CliError::usage_in(path, e))?;
    Ok(())
}

/// Resolve a manifest-relative path.
pub fn resolve_relative(manifest_path: &Path, rel: &str) -> PathBuf {
    match manifest_path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => dir.join(rel),
        _ => PathBuf::from(rel),
    }
}

/// Default timing-sidecar path for a decode output path.
pub fn timing_path(out: &Path) -> PathBuf {
    out.with_extension("timing.jsonl")
}
