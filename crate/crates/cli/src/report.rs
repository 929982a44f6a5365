//! Report assembly and emission: `summary.json` plus one CSV per series.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun the command that produced a report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: Value,
    pub inputs: Vec<InputDigest>,
    /// Digest of the command and all input digests.
    pub config_sha256: String,
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new<C: Serialize>(command: &C, inputs: &[&Path], seed: Option<u64>) -> Result<Self, CliError> {
        let command = serde_json::to_value(command).map_err(CliError::input)?;
        let mut digests = Vec::with_capacity(inputs.len());
        let mut h = Sha256::new();
        h.update(command.to_string().as_bytes());
        for p in inputs {
            let bytes = fs::read(p).map_err(|e| CliError::file(p, e))?;
            let d = hex::encode(Sha256::digest(&bytes));
            h.update(d.as_bytes());
            digests.push(InputDigest { path: p.display().to_string(), sha256: d });
        }
        Ok(Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command,
            inputs: digests,
            config_sha256: hex::encode(h.finalize()),
            seed,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub csv: Vec<u8>,
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    summary: Map<String, Value>,
    series: Vec<Series>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn metric<T: Serialize>(&mut self, key: &str, value: T) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.summary.insert(key.to_string(), v);
        self
    }

    /// Adds a table whose columns are the fields of `T`.
    pub fn rows<T: Serialize>(&mut self, name: &str, rows: &[T]) -> Result<&mut Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r).map_err(|e| CliError::input(format!("{name}.csv: {e}")))?;
        }
        self.push(name, w)
    }

    /// Adds a table with a header fixed only at run time.
    pub fn table(&mut self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<&mut Self, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| CliError::input(format!("{name}.csv: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        self.push(name, w)
    }

    fn push(&mut self, name: &str, w: csv::Writer<Vec<u8>>) -> Result<&mut Self, CliError> {
        let csv = w.into_inner().map_err(|e| CliError::input(format!("{name}.csv: {e}")))?;
        self.series.push(Series { name: name.to_string(), csv });
        Ok(self)
    }

    pub fn document(&self, provenance: &Provenance) -> Value {
        let names: Vec<String> = self.series.iter().map(|s| format!("{}.csv", s.name)).collect();
        serde_json::json!({
            "provenance": provenance,
            "summary": self.summary,
            "series": names,
        })
    }

    /// Writes `summary.json` and the series into `dir`, returning the paths
    /// written. On failure nothing written by this call is left behind.
    pub fn write(&self, dir: &Path, provenance: &Provenance) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        let created_dir = !dir.exists();
        let result = self.write_into(dir, provenance, &mut written);
        if result.is_err() {
            remove_outputs(&written);
            if created_dir {
                let _ = fs::remove_dir(dir);
            }
        }
        result.map(|_| written)
    }

    fn write_into(&self, dir: &Path, provenance: &Provenance, written: &mut Vec<PathBuf>) -> Result<(), CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::file(dir, e))?;
        let mut summary = serde_json::to_vec_pretty(&self.document(provenance)).map_err(CliError::input)?;
        summary.push(b'\n');
        let mut files: Vec<(String, &[u8])> = vec![("summary.json".into(), &summary)];
        files.extend(self.series.iter().map(|s| (format!("{}.csv", s.name), s.csv.as_slice())));
        for (name, bytes) in files {
            let path = dir.join(name);
            let mut f = fs::File::create(&path).map_err(|e| CliError::file(&path, e))?;
            written.push(path.clone());
            f.write_all(bytes).map_err(|e| CliError::file(&path, e))?;
        }
        Ok(())
    }
}

pub fn remove_outputs(paths: &[PathBuf]) {
    for p in paths {
        let _ = fs::remove_file(p);
    }
}

pub fn pct(v: f64) -> f64 {
    100.0 * v
}
