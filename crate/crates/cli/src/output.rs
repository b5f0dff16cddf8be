//! Output directory with atomic writes and a digest manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
struct Entry {
    sha256: String,
    bytes: u64,
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    entries: BTreeMap<String, Entry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes via a temporary sibling and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> CliResult<Self> {
        let root = root.into();
        fs::create_dir_all(&root)
            .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", root.display())))?;
        Ok(Self { root, entries: BTreeMap::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        write_atomic(&self.root.join(name), bytes)?;
        self.entries.insert(name.to_string(), Entry { sha256: sha256_hex(bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Runs a core CSV writer into a buffer and stores it.
    pub fn csv<F>(&mut self, name: &str, f: F) -> CliResult<()>
    where
        F: FnOnce(&mut Vec<u8>) -> merw_core::Result<()>,
    {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(name, &buf)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let mut buf = serde_json::to_vec_pretty(value).map_err(|e| CliError::Core(merw_core::Error::Io(e.to_string())))?;
        buf.push(b'\n');
        self.write(name, &buf)
    }

    pub fn files(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Writes `manifest.json` (command, resolved config, every file with its
    /// digest) and returns its bytes.
    pub fn finish(self, command: &str, config: serde_json::Value) -> CliResult<Vec<u8>> {
        let files: Vec<serde_json::Value> = self
            .entries
            .iter()
            .map(|(path, e)| serde_json::json!({ "path": path, "sha256": e.sha256, "bytes": e.bytes }))
            .collect();
        let manifest = serde_json::json!({ "command": command, "config": config, "files": files });
        let mut buf = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        buf.push(b'\n');
        write_atomic(&self.root.join(MANIFEST), &buf)?;
        Ok(buf)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_known_value() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
