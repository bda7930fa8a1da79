//! Run artifacts: trajectory CSV, summary JSON and the manifest.
//!
//! Files are staged in memory and written only once a run has finished, so a
//! failing run leaves no partial output behind.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::radial::StepRecord;

pub const SCHEMA_VERSION: u32 = 1;
pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const TRAJECTORY_COLUMNS: [&str; 6] = ["step", "time", "l2_norm", "w1p_seminorm", "lp_norm", "potential_energy"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub artifact_version: String,
    pub command: String,
    /// The run configuration without the output location, so that reruns into
    /// different roots produce identical manifests.
    pub config: ExperimentConfig,
    /// sha256 of the command name and the canonical config.
    pub input_hash: String,
    pub outputs: Vec<OutputEntry>,
    pub verdicts: BTreeMap<String, bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_seconds: Option<f64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Canonical input hash of a command and its configuration. The output
/// location and the timing switch do not take part.
pub fn input_hash(command: &str, config: &ExperimentConfig) -> String {
    let mut c = config.clone();
    c.output_dir = None;
    c.timing = false;
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(c.to_toml_string().as_bytes());
    hex::encode(h.finalize())
}

/// Trajectory table with the fixed column set.
pub fn trajectory_csv(records: &[StepRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.step.to_string(),
            r.time.to_string(),
            r.l2_norm.to_string(),
            r.w1p_seminorm.to_string(),
            r.lp_norm.to_string(),
            r.potential_energy.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

/// Generic numeric table.
pub fn table_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string())).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

/// JSON with a trailing newline and the schema version merged in at the top level.
pub fn summary_json<T: Serialize>(summary: &T) -> Result<Vec<u8>> {
    let mut value = serde_json::to_value(summary).map_err(|e| Error::Io(e.to_string()))?;
    if let serde_json::Value::Object(map) = &mut value {
        map.insert("schema_version".into(), SCHEMA_VERSION.into());
    }
    let mut out = serde_json::to_vec_pretty(&value).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

/// Files of one run, staged until [`Artifacts::commit`].
#[derive(Debug, Default)]
pub struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
    verdicts: BTreeMap<String, bool>,
}

impl Artifacts {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn verdict(&mut self, name: impl Into<String>, passed: bool) {
        self.verdicts.insert(name.into(), passed);
    }

    pub fn verdicts(&self) -> &BTreeMap<String, bool> {
        &self.verdicts
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts.values().all(|v| *v)
    }

    /// Writes every staged file plus `manifest.json` into
    /// `<root>/<command>-<hash prefix>/` and returns that directory.
    pub fn commit(
        self,
        root: &Path,
        command: &str,
        config: &ExperimentConfig,
        elapsed_seconds: Option<f64>,
    ) -> Result<PathBuf> {
        let hash = input_hash(command, config);
        let dir = root.join(format!("{command}-{}", &hash[..12]));
        std::fs::create_dir_all(&dir)?;
        let mut outputs = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            std::fs::write(dir.join(name), bytes)?;
            outputs.push(OutputEntry {
                file: name.clone(),
                sha256: sha256_hex(bytes),
                bytes: bytes.len(),
            });
        }
        let manifest = RunManifest {
            schema_version: SCHEMA_VERSION,
            artifact_version: ARTIFACT_VERSION.to_string(),
            command: command.to_string(),
            config: ExperimentConfig {
                output_dir: None,
                ..config.clone()
            },
            input_hash: hash,
            outputs,
            verdicts: self.verdicts,
            elapsed_seconds: if config.timing { elapsed_seconds } else { None },
        };
        let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
        text.push(b'\n');
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(dir)
    }
}
