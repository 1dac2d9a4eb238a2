//! Deterministic output writing: 17-significant-digit floats, atomic file
//! replacement (temp file + rename), and a manifest of every written file
//! with size and SHA-256.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Full-precision float formatting: one leading digit plus 16 decimals in
/// scientific notation round-trips every f64.
pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Collects rows in memory and lands them atomically.
pub struct CsvWriter {
    buffer: String,
}

impl CsvWriter {
    pub fn new(header: &str) -> Self {
        let mut buffer = String::new();
        buffer.push_str(header);
        buffer.push('\n');
        CsvWriter { buffer }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    pub fn float_row(&mut self, values: &[f64]) {
        let fields: Vec<String> = values.iter().map(|v| format_float(*v)).collect();
        self.row(&fields);
    }

    pub fn into_string(self) -> String {
        self.buffer
    }
}

/// Write bytes atomically: a rename either publishes the whole file or
/// leaves the previous content intact.
pub fn write_atomic(path: &Path, content: &[u8]) -> std::io::Result<OutputRecord> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp: PathBuf = path.with_extension(format!(
        "{}tmp-{}",
        path.extension()
            .map(|e| format!("{}.", e.to_string_lossy()))
            .unwrap_or_default(),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(content)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;

    let mut hasher = Sha256::new();
    hasher.update(content);
    Ok(OutputRecord {
        path: path.to_string_lossy().into_owned(),
        bytes: content.len() as u64,
        sha256: format!("{:x}", hasher.finalize()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_has_17_significant_digits() {
        assert_eq!(format_float(1.5), "1.5000000000000000e0");
        assert_eq!(format_float(-0.0625), "-6.2500000000000000e-2");
        let v = std::f64::consts::PI;
        let parsed: f64 = format_float(v).parse().unwrap();
        assert_eq!(parsed, v);
    }

    #[test]
    fn atomic_write_round_trips() {
        let dir = std::env::temp_dir().join(format!("bohm-out-test-{}", std::process::id()));
        let path = dir.join("nested/file.csv");
        let record = write_atomic(&path, b"a,b\n1,2\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "a,b\n1,2\n");
        assert_eq!(record.bytes, 8);
        assert_eq!(record.sha256.len(), 64);
        fs::remove_dir_all(&dir).unwrap();
    }
}
