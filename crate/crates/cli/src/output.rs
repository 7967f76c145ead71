//! Atomic file output and report provenance.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Write bytes atomically: temp file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))?;
    let tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    std::fs::write(tmp.path(), bytes)
        .with_context(|| format!("cannot write {}", tmp.path().display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot persist {}", path.display()))?;
    Ok(())
}

/// Format a float with 17 significant digits (exact round trip).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Report envelope: resolved config + content hash + command payload.
#[derive(Serialize)]
pub struct Report<'a, P: Serialize> {
    pub command: &'a str,
    pub config: &'a RunConfig,
    pub config_sha256: String,
    pub outputs: Vec<String>,
    #[serde(flatten)]
    pub payload: P,
}

pub fn config_hash(config: &RunConfig) -> anyhow::Result<String> {
    let canonical = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    Ok(hex::encode(hasher.finalize()))
}

/// Write the report JSON (pretty) and echo a single-line summary to stdout.
pub fn emit_report<P: Serialize>(
    out_dir: &Path,
    command: &str,
    config: &RunConfig,
    outputs: &[PathBuf],
    payload: P,
) -> anyhow::Result<()> {
    let report = Report {
        command,
        config,
        config_sha256: config_hash(config)?,
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        payload,
    };
    let path = out_dir.join("result.json");
    write_atomic(&path, serde_json::to_string_pretty(&report)?.as_bytes())?;
    // single-line summary on stdout
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
