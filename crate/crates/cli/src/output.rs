//! Output directory with content-hashed files and a run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Version of the JSON layouts written by the runner.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Formats with 12 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

/// Rounds every JSON number to 12 significant digits.
pub fn round_json(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .and_then(|x| num(x).parse::<f64>().ok())
            .and_then(serde_json::Number::from_f64)
            .map_or(Value::Null, Value::Number),
        Value::Array(a) => Value::Array(a.into_iter().map(round_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round_json(v))).collect()),
        other => other,
    }
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Writes a CSV produced by `fill`.
    pub fn write_csv(&mut self, name: &str, fill: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        fill(&mut buf)?;
        self.write_bytes(name, &buf)
    }

    /// Writes pretty JSON with numbers rounded to 12 significant digits.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let v = round_json(serde_json::to_value(value)?);
        let mut buf = serde_json::to_vec_pretty(&v)?;
        buf.push(b'\n');
        self.write_bytes(name, &buf)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(mut self, subcommand: &str, seed: u64, config_sha256: &str) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            schema_version: u32,
            tool: &'static str,
            tool_version: &'static str,
            library_version: &'static str,
            subcommand: &'a str,
            seed: u64,
            config_sha256: &'a str,
            files: &'a [FileEntry],
        }
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let m = Manifest {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            tool_version: env!("CARGO_PKG_VERSION"),
            library_version: qlink::VERSION,
            subcommand,
            seed,
            config_sha256,
            files: &self.files,
        };
        let path = self.root.join("manifest.json");
        let mut f = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        serde_json::to_writer_pretty(&mut f, &m)?;
        f.write_all(b"\n")?;
        Ok(())
    }
}
