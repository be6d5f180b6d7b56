//! `key = value` sidecar files with SHA-256 checksums of the data they describe.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

use crate::UsageError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("meta")
}

pub fn write(path: &Path, entries: &[(&str, String)]) -> Result<()> {
    let mut text = String::new();
    for (k, v) in entries {
        text.push_str(&format!("{k} = {v}\n"));
    }
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub fn read(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect())
}

/// Fails when `data` has a sidecar whose `sha256` does not match its bytes.
pub fn verify(data: &Path, bytes: &[u8]) -> Result<()> {
    let side = sidecar_path(data);
    if !side.exists() {
        return Ok(());
    }
    let meta = read(&side)?;
    if let Some(expected) = meta.get("sha256") {
        let actual = sha256_hex(bytes);
        if *expected != actual {
            return Err(UsageError(format!(
                "checksum mismatch for {}: metadata says {expected}, file hashes to {actual}",
                data.display()
            ))
            .into());
        }
    }
    Ok(())
}
