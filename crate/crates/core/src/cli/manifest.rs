//! Run outputs and their manifest.
//!
//! The manifest is itself a config file: the resolved configuration plus
//! `[run]` and `[artifacts]` sections, which the config parser skips.
//! Rerunning a command with `--config manifest.ini` reproduces every
//! listed artifact byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::{CliError, ExperimentConfig};

pub const MANIFEST_NAME: &str = "manifest.ini";

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in digest.iter() {
        write!(s, "{b:02x}").unwrap();
    }
    s
}

#[derive(Debug)]
pub struct RunOutputs {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl RunOutputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), hashes: BTreeMap::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` under the run directory and records its hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    /// Writes the manifest, then re-reads every artifact to confirm what is
    /// on disk matches what was produced.
    pub fn finish(self, command: &str, cfg: &ExperimentConfig, seeds: &[(&str, String)]) -> Result<PathBuf, CliError> {
        let mut s = format!("# sphadc run manifest; rerun with: sphadc {command} --config {MANIFEST_NAME}\n");
        writeln!(s, "[run]").unwrap();
        writeln!(s, "command = {command}").unwrap();
        writeln!(s, "version = {}", env!("CARGO_PKG_VERSION")).unwrap();
        writeln!(s, "dataset_version = {}", crate::datagen::DATASET_VERSION).unwrap();
        for (k, v) in seeds {
            writeln!(s, "{k} = {v}").unwrap();
        }
        s.push('\n');
        s.push_str(&cfg.to_text());
        writeln!(s, "[artifacts]").unwrap();
        for (name, hash) in &self.hashes {
            writeln!(s, "{name} = {hash}").unwrap();
        }
        let path = self.dir.join(MANIFEST_NAME);
        std::fs::write(&path, s)?;
        let bad = verify_manifest(&path)?;
        if let Some(name) = bad.first() {
            return Err(CliError::Validation(name.clone()));
        }
        Ok(path)
    }
}

/// Names of artifacts whose current hash differs from the manifest or
/// which are missing.
pub fn verify_manifest(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut in_artifacts = false;
    let mut bad = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with('[') {
            in_artifacts = line == "[artifacts]";
            continue;
        }
        if !in_artifacts || line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((name, hash)) = line.split_once('=') else { continue };
        let (name, hash) = (name.trim(), hash.trim());
        match std::fs::read(dir.join(name)) {
            Ok(bytes) if sha256_hex(&bytes) == hash => {}
            _ => bad.push(name.to_string()),
        }
    }
    Ok(bad)
}
