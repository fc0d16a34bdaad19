//! Run reports and CSV emission. Floats are serialized with 17 significant
//! digits so identical runs produce byte-identical files.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::Config;

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_float(v: f64) -> String {
    format!("{:.16e}", v)
}

#[derive(Debug, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Config,
    pub config_sha256: String,
    pub results: serde_json::Map<String, serde_json::Value>,
    pub warnings: Vec<String>,
    /// Not covered by the bit-exact reproducibility promise.
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(command: &str, config: &Config) -> Self {
        let canonical = toml::to_string(config).unwrap_or_default();
        let mut hasher = Sha256::new();
        hasher.update(canonical.as_bytes());
        Self {
            command: command.to_string(),
            config: config.clone(),
            config_sha256: format!("{:x}", hasher.finalize()),
            results: serde_json::Map::new(),
            warnings: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn put(&mut self, key: &str, value: serde_json::Value) {
        self.results.insert(key.to_string(), value);
    }

    pub fn put_f64(&mut self, key: &str, value: f64) {
        self.put(key, serde_json::json!(value));
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    pub fn write(&self, out_dir: &Path) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(out_dir)?;
        let path = out_dir.join(format!("{}.json", self.command));
        let mut file = std::fs::File::create(&path)?;
        let text = serde_json::to_string_pretty(self).expect("report serialization");
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")?;
        Ok(path)
    }
}

/// Write a CSV with a header row; every cell is either a preformatted string
/// or a float rendered with 17 significant digits.
pub struct CsvWriter {
    file: std::io::BufWriter<std::fs::File>,
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> std::io::Result<Self> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(file, "{}", header.join(","))?;
        Ok(Self { file })
    }

    pub fn row(&mut self, cells: &[f64]) -> std::io::Result<()> {
        let rendered: Vec<String> = cells.iter().map(|&v| fmt_float(v)).collect();
        writeln!(self.file, "{}", rendered.join(","))
    }

    pub fn row_mixed(&mut self, label: &str, cells: &[f64]) -> std::io::Result<()> {
        let rendered: Vec<String> = cells.iter().map(|&v| fmt_float(v)).collect();
        writeln!(self.file, "{},{}", label, rendered.join(","))
    }

    pub fn finish(mut self) -> std::io::Result<()> {
        self.file.flush()
    }
}
