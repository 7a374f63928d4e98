//! Run manifests: what was run, with which settings, and what it produced.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub flags: serde_json::Value,
    pub seed: Option<u64>,
    pub grid: Option<Vec<f64>>,
    pub workers: usize,
    pub phases: Vec<Phase>,
    /// File name → SHA-256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub results: BTreeMap<String, serde_json::Value>,
}

/// Collects outputs and timings for one command and writes them under `out`.
pub struct Run {
    out: PathBuf,
    manifest: Manifest,
    started: Instant,
}

impl Run {
    pub fn new(out: &Path, command: &str, flags: serde_json::Value, workers: usize) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::Data(format!("cannot create {}: {e}", out.display())))?;
        Ok(Self {
            out: out.to_path_buf(),
            manifest: Manifest {
                tool: "netfuse".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                command: command.into(),
                argv: std::env::args().collect(),
                flags,
                seed: None,
                grid: None,
                workers,
                phases: Vec::new(),
                artifacts: BTreeMap::new(),
                results: BTreeMap::new(),
            },
            started: Instant::now(),
        })
    }

    pub fn set_argv(&mut self, argv: Vec<String>) {
        self.manifest.argv = argv;
    }

    pub fn seed(&mut self, seed: u64) {
        self.manifest.seed = Some(seed);
    }

    pub fn grid(&mut self, grid: &[f64]) {
        self.manifest.grid = Some(grid.to_vec());
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("serializable result");
        self.manifest.results.insert(key.into(), v);
    }

    /// Times `f` as a named phase.
    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let v = f();
        self.manifest.phases.push(Phase { name: name.into(), seconds: start.elapsed().as_secs_f64() });
        v
    }

    pub fn artifact(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        self.manifest.artifacts.insert(name.into(), hex::encode(Sha256::digest(bytes)));
        Ok(())
    }

    pub fn finish(mut self) -> Result<Manifest, CliError> {
        self.manifest.phases.push(Phase { name: "total".into(), seconds: self.started.elapsed().as_secs_f64() });
        let mut text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.out.join(FILE_NAME);
        fs::write(&path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))?;
        Ok(self.manifest)
    }
}

pub fn read(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("bad manifest {}: {e}", path.display())))
}
