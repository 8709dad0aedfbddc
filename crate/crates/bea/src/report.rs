//! Output files and run manifests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context as _, Result};
use bea_core::numlab::Trajectory;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Latex,
    Json,
    Csv,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Text => "txt",
            Format::Latex => "tex",
            Format::Json => "json",
            Format::Csv => "csv",
        }
    }
}

/// Git-style content hash: SHA-256 of "blob <len>\0" followed by the content.
pub fn content_hash(content: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(content);
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputFile {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub settings: Value,
    /// Hash of the canonical symbolic inputs.
    pub input_hash: String,
    pub outputs: Vec<OutputFile>,
    pub created_unix: u64,
}

/// Primary outputs of one command, written together with `manifest.json`.
pub struct Report {
    pub command: String,
    pub settings: Value,
    pub inputs: String,
    pub files: Vec<(String, String)>,
}

impl Report {
    pub fn new(command: &str, settings: Value, inputs: String) -> Report {
        Report { command: command.into(), settings, inputs, files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, content: String) {
        self.files.push((name.into(), content));
    }

    pub fn manifest(&self) -> Manifest {
        let created_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Manifest {
            command: self.command.clone(),
            settings: self.settings.clone(),
            input_hash: content_hash(self.inputs.as_bytes()),
            outputs: self
                .files
                .iter()
                .map(|(f, c)| OutputFile { file: f.clone(), sha256: content_hash(c.as_bytes()) })
                .collect(),
            created_unix,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut written = Vec::new();
        for (name, content) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, content).with_context(|| format!("writing {}", p.display()))?;
            written.push(p);
        }
        let p = dir.join("manifest.json");
        std::fs::write(&p, serde_json::to_string_pretty(&self.manifest())? + "\n")?;
        written.push(p);
        Ok(written)
    }
}

pub fn trajectory_csv(t: &Trajectory, state_names: &[&str]) -> String {
    let mut s = String::from("xi");
    for n in state_names {
        s.push(',');
        s.push_str(n);
    }
    for c in &t.channels {
        s.push(',');
        s.push_str(&c.name);
    }
    s.push('\n');
    for (i, xi) in t.xi.iter().enumerate() {
        write!(s, "{xi:e}").unwrap();
        for v in &t.states[i] {
            write!(s, ",{v:e}").unwrap();
        }
        for c in &t.channels {
            write!(s, ",{:e}", c.values[i]).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn csv_escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}
