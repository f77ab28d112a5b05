use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// Provenance record written next to the artifacts of one command.
pub struct RunManifest {
    pub command: String,
    pub config: String,
    pub seed: u64,
    started: u64,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn start(command: &str, seed: u64) -> Self {
        Self { command: command.into(), config: String::new(), seed, started: unix_now(), inputs: vec![], outputs: vec![] }
    }

    pub fn input(&mut self, p: &Path) {
        self.inputs.push(p.to_path_buf());
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn config_digest(&self) -> String {
        sha256_hex(self.config.as_bytes())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "tool_version={}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(s, "seed={}", self.seed);
        let _ = writeln!(s, "config_digest={}", self.config_digest());
        let _ = writeln!(s, "started_unix={}", self.started);
        let _ = writeln!(s, "finished_unix={}", unix_now());
        for (i, p) in self.inputs.iter().enumerate() {
            let _ = writeln!(s, "input.{i}={} sha256:{}", p.display(), file_digest(p)?);
        }
        for (i, p) in self.outputs.iter().enumerate() {
            let _ = writeln!(s, "output.{i}={} sha256:{}", p.display(), file_digest(p)?);
        }
        for line in self.config.lines() {
            let _ = writeln!(s, "config.{}", line.replace(" = ", "="));
        }
        fs::write(path, s).with_context(|| format!("writing {}", path.display()))
    }
}
