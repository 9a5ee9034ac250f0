//! CSV tables and the JSON run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use schamel_core::WaveParams;

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| float(x)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("CSV is UTF-8")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Every resolved input, numbers echoed as parsed.
    pub parameters: BTreeMap<String, Value>,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave: Option<WaveParams>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            parameters: BTreeMap::new(),
            artifact_version: ARTIFACT_VERSION.to_owned(),
            outputs: Vec::new(),
            wave: None,
        }
    }

    pub fn param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.parameters.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_wave(mut self, p: &WaveParams) -> Self {
        self.wave = Some(*p);
        self
    }
}

fn sidecar(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes `body` to `out` and the manifest to `out.json`, or `body` to
/// stdout and the manifest to stderr.
pub fn emit(body: &str, out: Option<&Path>, mut manifest: RunManifest) -> std::io::Result<()> {
    match out {
        Some(path) => {
            let meta = sidecar(path);
            manifest.outputs = vec![path.display().to_string(), meta.display().to_string()];
            fs::write(path, body)?;
            let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            fs::write(meta, json + "\n")
        }
        None => {
            manifest.outputs = vec!["<stdout>".to_owned()];
            print!("{body}");
            let json = serde_json::to_string(&manifest).expect("manifest serializes");
            eprintln!("{json}");
            Ok(())
        }
    }
}
