//! Run manifests: every run directory gets exactly one manifest.json
//! recording the command, a digest of the exact config bytes, the seed,
//! the tool version, the wall time, and a per-check pass/fail table.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::Path;

#[derive(Serialize)]
pub struct Manifest {
    pub command: String,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub tool_version: String,
    pub wall_time_s: f64,
    pub checks: Vec<Check>,
}

#[derive(Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
}

pub fn digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    format!("{:x}", hasher.finalize())
}

impl Manifest {
    pub fn new(command: impl Into<String>, config_bytes: &[u8], seed: Option<u64>) -> Self {
        Manifest {
            command: command.into(),
            config_digest: digest(config_bytes),
            seed,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: 0.0,
            checks: Vec::new(),
        }
    }

    pub fn check(&mut self, name: impl Into<String>, pass: bool) {
        self.checks.push(Check { name: name.into(), pass });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(dir.join("manifest.json"), body)
    }
}
