//! CSV files, digests and the run manifest.
//!
//! Floats are written with 17 significant digits, rows end in LF, and every
//! file's SHA-256 digest goes into `manifest.json`.

use crate::error::CliError;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// A float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

/// One CSV table with a fixed header.
pub struct Table {
    pub name: String,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Table {
            name: name.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.header.len(), "row width of {}", self.name);
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(vec![]);
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Row cell helpers.
#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::cell(&$x)),*] };
}

pub trait Cell {
    fn cell(&self) -> String;
}

impl Cell for f64 {
    fn cell(&self) -> String {
        fmt_f64(*self)
    }
}

macro_rules! int_cell {
    ($($t:ty),*) => {$(impl Cell for $t { fn cell(&self) -> String { self.to_string() } })*};
}
int_cell!(usize, u64, u32, i64, bool);

impl Cell for String {
    fn cell(&self) -> String {
        self.clone()
    }
}

impl Cell for &str {
    fn cell(&self) -> String {
        self.to_string()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Output directory plus everything the manifest records.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    config: Value,
    seed: u64,
    started: std::time::Instant,
    digests: BTreeMap<String, String>,
    truncated: bool,
    results: BTreeMap<String, Value>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config: &'a Value,
    wall_clock_ms: u128,
    files: &'a BTreeMap<String, String>,
    truncated: bool,
    results: &'a BTreeMap<String, Value>,
}

impl Run {
    pub fn new(dir: &Path, command: &str, config: Value, seed: u64) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            command: command.into(),
            config,
            seed,
            started: std::time::Instant::now(),
            digests: BTreeMap::new(),
            truncated: false,
            results: BTreeMap::new(),
        })
    }

    pub fn write(&mut self, table: &Table) -> Result<String, CliError> {
        let bytes = table.to_bytes()?;
        let path = self.dir.join(&table.name);
        std::fs::write(&path, &bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let digest = sha256_hex(&bytes);
        self.digests.insert(table.name.clone(), digest.clone());
        Ok(digest)
    }

    pub fn mark_truncated(&mut self) {
        self.truncated = true;
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn digests(&self) -> &BTreeMap<String, String> {
        &self.digests
    }

    /// Writes `manifest.json`; consumes the run so it happens once.
    pub fn finish(self) -> Result<BTreeMap<String, String>, CliError> {
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            seed: self.seed,
            config: &self.config,
            wall_clock_ms: self.started.elapsed().as_millis(),
            files: &self.digests,
            truncated: self.truncated,
            results: &self.results,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(self.digests)
    }
}
