//! The `run_manifest.json` written next to every command's outputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;
use crate::io::write_json;

pub const RUN_MANIFEST_FILE: &str = "run_manifest.json";

/// Seed for one stochastic stage: the first eight bytes (little endian) of
/// SHA-256 over the master seed's little-endian bytes followed by the stage
/// name.
pub fn stage_seed(master: u64, stage: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master.to_le_bytes());
    h.update(stage.as_bytes());
    let digest = h.finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

/// Hex SHA-256 of the compact JSON form of `config`. serde_json keeps map
/// keys sorted, so equal configs hash equally.
pub fn config_hash(config: &serde_json::Value) -> String {
    let text = serde_json::to_string(config).expect("a JSON value always serializes");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub seed: u64,
    pub stage_seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub wall_clock_secs: f64,
}

/// Collects what a command did so the manifest can be written at the end.
#[derive(Debug)]
pub struct RunLog {
    pub subcommand: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub stage_seeds: BTreeMap<String, u64>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

impl RunLog {
    pub fn new(subcommand: &str, seed: u64) -> Self {
        RunLog {
            subcommand: subcommand.to_owned(),
            seed,
            config: serde_json::Value::Null,
            stage_seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    /// Derives and records the seed of `stage`.
    pub fn seed_for(&mut self, stage: &str) -> u64 {
        let s = stage_seed(self.seed, stage);
        self.stage_seeds.insert(stage.to_owned(), s);
        s
    }

    pub fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(self, dir: &Path, elapsed_secs: f64) -> Result<()> {
        let manifest = RunManifest {
            tool: "adlens",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: self.subcommand,
            config_hash: config_hash(&self.config),
            config: self.config,
            seed: self.seed,
            stage_seeds: self.stage_seeds,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock_secs: elapsed_secs,
        };
        write_json(&dir.join(RUN_MANIFEST_FILE), &manifest)
    }
}
