//! Deterministic serialization: CSV with '#' metadata lines and
//! 17-significant-digit scientific notation, JSON with stable key order,
//! and the config hash that ties every output back to its inputs.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::config::SimConfig;

/// SHA-256 of the canonical config echo plus the effective seed.
pub fn config_hash(cfg: &SimConfig) -> String {
    let mut hasher = Sha256::new();
    hasher.update(cfg.canonical().as_bytes());
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

/// Full-precision scientific rendering; 17 significant digits round-trip
/// every f64 exactly.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// A CSV file under construction.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(cfg: &SimConfig, command: &str, columns: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(&format!("# command = {command}\n"));
        buf.push_str(&format!("# config_hash = {}\n", config_hash(cfg)));
        buf.push_str(&format!("# seed = {}\n", cfg.run.seed));
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Self { buf }
    }

    /// Inserts a metadata line at the end of the leading '#' block, before
    /// the column header.
    pub fn meta(&mut self, key: &str, value: &str) {
        let line = format!("# {key} = {value}\n");
        let mut idx = 0;
        for seg in self.buf.split_inclusive('\n') {
            if seg.starts_with('#') {
                idx += seg.len();
            } else {
                break;
            }
        }
        self.buf.insert_str(idx, &line);
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        let mut f = fs::File::create(path)?;
        f.write_all(self.buf.as_bytes())
    }
}

/// Writes a JSON value (already carrying its own key order) with the
/// config hash injected at the top.
pub fn write_json(
    path: &Path,
    cfg: &SimConfig,
    command: &str,
    body: serde_json::Value,
) -> io::Result<()> {
    let mut root = serde_json::Map::new();
    root.insert("command".into(), command.into());
    root.insert("config_hash".into(), config_hash(cfg).into());
    root.insert("seed".into(), cfg.run.seed.into());
    root.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    root.insert("report".into(), body);
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let text = serde_json::to_string_pretty(&serde_json::Value::Object(root))?;
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")
}
