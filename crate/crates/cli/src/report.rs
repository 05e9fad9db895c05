//! Command output: a text rendering, a JSON document and optional files,
//! plus the `--out` directory writer with its provenance manifest.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};

use crate::input::Input;

pub struct Report {
    pub text: String,
    pub json: Value,
    /// Extra artifacts written under `--out` (name, contents).
    pub files: Vec<(String, Vec<u8>)>,
}

impl Report {
    pub fn new(text: String, json: Value) -> Self {
        Report { text, json, files: Vec::new() }
    }

    pub fn with_file(mut self, name: &str, contents: impl Into<Vec<u8>>) -> Self {
        self.files.push((name.to_string(), contents.into()));
        self
    }
}

#[derive(Serialize)]
struct InputRecord<'a> {
    path: &'a str,
    format: &'a str,
    sha256: &'a str,
}

pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

/// Writes `report.txt`, `report.json`, the extra files and `manifest.json`.
pub fn write_out(dir: &Path, command: &str, config: Value, inputs: &[Input], report: &Report) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = vec![("report.txt".to_string(), report.text.clone().into_bytes()), ("report.json".to_string(), to_json_string(&report.json).into_bytes())];
    outputs.extend(report.files.iter().cloned());
    for (name, bytes) in &outputs {
        std::fs::write(dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
    }
    let manifest = json!({
        "tool": "ballots",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "inputs": inputs.iter().map(|i| InputRecord { path: &i.path, format: i.format, sha256: &i.sha256 }).collect::<Vec<_>>(),
        "outputs": outputs.iter().map(|(name, bytes)| json!({ "file": name, "sha256": crate::input::sha256_hex(bytes) })).collect::<Vec<_>>(),
    });
    std::fs::write(dir.join("manifest.json"), to_json_string(&manifest)).context("writing manifest.json")?;
    Ok(())
}
