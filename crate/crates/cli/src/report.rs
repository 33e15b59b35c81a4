//! Report and run-manifest files. The report payload is a pure function of
//! the parameters, inputs and seed; everything that varies between runs
//! (timestamps, worker count) lives in the manifest only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA: &str = "dioexp.report/1";
pub const MANIFEST_SCHEMA: &str = "dioexp.manifest/1";

/// How a number in the payload should be read.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimateKind {
    /// Best value found up to a finite height; the true limsup may be larger.
    LowerBound,
    Exact,
    MonteCarloWithCi,
    /// Pass/fail of a deterministic check.
    Verification,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub inputs: Vec<InputFile>,
    pub seed: u64,
    pub estimate_kind: EstimateKind,
    pub complete: bool,
    pub payload: Value,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema: &'static str,
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub inputs: Vec<InputFile>,
    pub seed: u64,
    pub workers: usize,
    pub version: &'static str,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub report_path: String,
    pub report_sha256: String,
    pub summary: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Collects inputs and parameters while a command runs.
#[derive(Default)]
pub struct Run {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub inputs: Vec<InputFile>,
    pub seed: u64,
    pub workers: usize,
    pub started: u128,
}

impl Run {
    pub fn param(&mut self, key: &str, v: impl Serialize) {
        self.params.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    /// Reads an input file and records its hash.
    pub fn read_input(&mut self, path: &Path) -> std::io::Result<String> {
        let bytes = std::fs::read(path)?;
        self.inputs.push(InputFile { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
        String::from_utf8(bytes).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Writes `<stem>.json` and `<stem>.manifest.json`; returns the report path.
    pub fn finish(
        self,
        out: &Path,
        kind: EstimateKind,
        complete: bool,
        payload: impl Serialize,
        summary: Value,
    ) -> std::io::Result<PathBuf> {
        let report = Report {
            schema: REPORT_SCHEMA,
            command: self.command.clone(),
            params: self.params.clone(),
            inputs: self.inputs.clone(),
            seed: self.seed,
            estimate_kind: kind,
            complete,
            payload: serde_json::to_value(payload).map_err(std::io::Error::other)?,
        };
        let text = serde_json::to_string_pretty(&report).map_err(std::io::Error::other)? + "\n";
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(out, &text)?;
        let manifest = RunManifest {
            schema: MANIFEST_SCHEMA,
            command: self.command,
            params: self.params,
            inputs: self.inputs,
            seed: self.seed,
            workers: self.workers,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_ms: self.started,
            finished_unix_ms: now_ms(),
            report_path: out.display().to_string(),
            report_sha256: sha256_hex(text.as_bytes()),
            summary,
        };
        let mpath = manifest_path(out);
        std::fs::write(&mpath, serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)? + "\n")?;
        Ok(out.to_path_buf())
    }
}

pub fn manifest_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map_or("report".into(), |s| s.to_string_lossy().into_owned());
    report.with_file_name(format!("{stem}.manifest.json"))
}
