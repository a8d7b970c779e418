use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Reproducibility record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest<C: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config: C,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(FileDigest {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    })
}

/// Output files are recorded relative to the run directory.
pub fn write_manifest<C: Serialize>(out: &Path, command: &'static str, config: C, inputs: &[&Path], outputs: &[PathBuf]) -> Result<()> {
    let manifest = RunManifest {
        tool: "sqlforecast",
        version: env!("CARGO_PKG_VERSION"),
        command,
        config,
        inputs: inputs.iter().map(|p| digest_file(p)).collect::<Result<_>>()?,
        outputs: outputs
            .iter()
            .map(|p| {
                let mut d = digest_file(p)?;
                d.path = p.strip_prefix(out).unwrap_or(p).display().to_string();
                Ok(d)
            })
            .collect::<Result<_>>()?,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<PathBuf> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path.to_path_buf())
}
