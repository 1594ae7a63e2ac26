//! Report and table writers. JSON goes through `serde_json` (shortest
//! round-trip floats, sorted keys); tables are RFC-4180 CSV with CRLF endings.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::Value;
use sha2::{Digest, Sha256};

use super::Failure;
use crate::operators::Matrix;

/// JSON number, or a string for non-finite values (`"+inf"`, `"-inf"`, `"nan"`).
pub fn num(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else if v.is_nan() {
        Value::from("nan")
    } else if v > 0.0 {
        Value::from("+inf")
    } else {
        Value::from("-inf")
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn provenance(model_hash: &str, seed: Option<u64>) -> Value {
    serde_json::json!({
        "tool": "min-energy",
        "version": crate::VERSION,
        "model_sha256": model_hash,
        "seed": seed.map(|s| format!("{s:#x}")),
    })
}

pub struct OutDir(PathBuf);

impl OutDir {
    pub fn create(path: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(path).map_err(|e| Failure::io(path, e))?;
        Ok(Self(path.to_path_buf()))
    }

    pub fn json(&self, name: &str, value: &Value) -> Result<PathBuf, Failure> {
        let path = self.0.join(name);
        let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        Ok(path)
    }

    pub fn csv<I>(&self, name: &str, header: &[String], rows: I) -> Result<PathBuf, Failure>
    where
        I: IntoIterator<Item = Vec<f64>>,
    {
        let path = self.0.join(name);
        let io = |e: csv::Error| Failure::io(&path, e.into());
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_path(&path)
            .map_err(io)?;
        w.write_record(header).map_err(io)?;
        for row in rows {
            w.serialize(row).map_err(io)?;
        }
        w.flush().map_err(|e| Failure::io(&path, e))?;
        Ok(path)
    }

    pub fn matrix_csv(&self, name: &str, m: &Matrix) -> Result<PathBuf, Failure> {
        let header = indexed("col", m.ncols());
        self.csv(
            name,
            &header,
            (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()),
        )
    }
}

/// `prefix_1, …, prefix_n`.
pub fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}_{i}")).collect()
}
