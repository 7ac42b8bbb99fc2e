//! CSV tables with a JSON sidecar each.

use crate::config::ExperimentConfig;
use crate::failure::Failure;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};

/// Artifact format version written into every sidecar.
pub const FORMAT_VERSION: u32 = 1;

/// 17 significant digits; round-trips every finite double.
pub fn float(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn opt_float(v: Option<f64>) -> String {
    v.map(float).unwrap_or_default()
}

pub struct Table {
    name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table { name: name.into(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(name: &str, header: Vec<String>) -> Self {
        Table { name: name.into(), header, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

pub struct Writer<'a> {
    dir: PathBuf,
    config: &'a ExperimentConfig,
}

impl<'a> Writer<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Result<Self, Failure> {
        let dir = config.output_dir.clone();
        std::fs::create_dir_all(&dir).map_err(|e| Failure::io(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Writer { dir, config })
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.dir.join(file)
    }

    /// Writes `<name>.csv` and `<name>.json`; `summary` goes into the sidecar.
    pub fn table(&self, table: &Table, summary: Value) -> Result<PathBuf, Failure> {
        let path = self.path(&format!("{}.csv", table.name));
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        let sidecar = json!({
            "artifact": format!("{}.csv", table.name),
            "version": FORMAT_VERSION,
            "generator": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
            "columns": table.header,
            "rows": table.rows.len(),
            "config": self.config,
            "summary": summary,
        });
        self.json(&format!("{}.json", table.name), &sidecar)?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, file: &str, value: &T) -> Result<PathBuf, Failure> {
        let path = self.path(file);
        write_json(&path, value)?;
        Ok(path)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Failure::io(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(float(0.1), "1.0000000000000001e-1");
        assert_eq!(float(-2.0), "-2.0000000000000000e0");
        assert_eq!(float(f64::NAN), "NaN");
        assert_eq!(float(f64::NEG_INFINITY), "-inf");
        let x = 1.0 / 3.0;
        assert_eq!(float(x).parse::<f64>().unwrap(), x);
        assert_eq!(opt_float(None), "");
    }
}
