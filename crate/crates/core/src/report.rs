//! Machine-readable analysis reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Version of the report layout described by [`SCHEMA`].
pub const SCHEMA_VERSION: &str = "1.0";

/// JSON schema for [`AnalysisReport`].
pub const SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub command: Vec<String>,
    pub input_digest: String,
    pub seed: u64,
    pub payload: Value,
    /// Wall time per stage in milliseconds. The only nondeterministic
    /// field.
    pub timings_ms: BTreeMap<String, f64>,
}

impl AnalysisReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Accumulates inputs, payload sections and stage timings.
#[derive(Debug)]
pub struct ReportBuilder {
    command: Vec<String>,
    seed: u64,
    digest: Sha256,
    payload: serde_json::Map<String, Value>,
    timings: BTreeMap<String, f64>,
}

impl ReportBuilder {
    pub fn new(command: Vec<String>, seed: u64) -> Self {
        ReportBuilder {
            command,
            seed,
            digest: Sha256::new(),
            payload: serde_json::Map::new(),
            timings: BTreeMap::new(),
        }
    }

    /// Feeds one input (file content or inline text) into the digest.
    pub fn input(&mut self, bytes: &[u8]) {
        self.digest.update((bytes.len() as u64).to_le_bytes());
        self.digest.update(bytes);
    }

    pub fn section(&mut self, name: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("payload serializes");
        self.payload.insert(name.to_owned(), v);
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        let ms = start.elapsed().as_secs_f64() * 1e3;
        *self.timings.entry(stage.to_owned()).or_default() += ms;
        out
    }

    pub fn finish(self) -> AnalysisReport {
        AnalysisReport {
            schema_version: SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            input_digest: self
                .digest
                .finalize()
                .iter()
                .map(|b| format!("{b:02x}"))
                .collect(),
            seed: self.seed,
            payload: Value::Object(self.payload),
            timings_ms: self.timings,
        }
    }
}
