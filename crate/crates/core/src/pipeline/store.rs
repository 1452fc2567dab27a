//! File helpers for the experiment directory.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{read_delimited, write_delimited, Dataset, DelimitedLayout, FeatureSpec};
use crate::error::{Error, Result};

pub const MARKER_FILE: &str = "phase_complete.json";
pub const ID_COLUMN: &str = "instance_id";
pub const GROUP_COLUMN: &str = "match_group";

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// A missing file is a prerequisite error; other failures are I/O errors.
pub fn read_text(path: &Path) -> Result<String> {
    match fs::read_to_string(path) {
        Ok(s) => Ok(s),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::Prerequisite(format!("missing artifact {}", path.display())))
        }
        Err(e) => Err(Error::io(path, e)),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &serde_json::to_string_pretty(value)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_text(path)?)?)
}

fn layout(outcome: &str) -> DelimitedLayout {
    DelimitedLayout::new(outcome)
        .with_id(Some(ID_COLUMN.to_string()))
        .with_group(Some(GROUP_COLUMN.to_string()))
}

pub fn save_dataset(path: &Path, ds: &Dataset) -> Result<()> {
    let mut buf = Vec::new();
    write_delimited(ds, &mut buf, &layout(&ds.outcome_name))?;
    write_text(path, std::str::from_utf8(&buf).expect("csv output is utf-8"))
}

/// Reads a file written by [`save_dataset`], restoring kinds and origins.
pub fn load_dataset(path: &Path, outcome: &str, specs: &[FeatureSpec]) -> Result<Dataset> {
    let text = read_text(path)?;
    let mut l = layout(outcome);
    if !text.lines().next().unwrap_or("").split(',').any(|h| h == GROUP_COLUMN) {
        l.group = None;
    }
    read_delimited(text.as_bytes(), &l)?.apply_specs(specs)
}

/// Simple delimited table with a header row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Table {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::data(e.to_string()))?;
        write_text(path, std::str::from_utf8(&bytes).expect("csv output is utf-8"))
    }

    pub fn read(path: &Path) -> Result<Table> {
        let text = read_text(path)?;
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::data(format!("table lacks column '{name}'")))
    }
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn parse_num(s: &str) -> Result<f64> {
    s.parse().map_err(|_| Error::data(format!("expected a number, got '{s}'")))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn collect_files(dir: &Path, base: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect_files(&path, base, out)?;
        } else if path.file_name().is_some_and(|n| n != MARKER_FILE) {
            out.push(path.strip_prefix(base).expect("walked below base").to_path_buf());
        }
    }
    Ok(())
}

/// Hash over every file below `dir` (except markers), keyed by relative path.
/// Nested phase directories are skipped.
pub fn hash_dir(dir: &Path, skip: &[&Path]) -> Result<String> {
    let mut files = Vec::new();
    if dir.is_dir() {
        collect_files(dir, dir, &mut files)?;
    }
    files.retain(|f| !skip.iter().any(|s| f.starts_with(s)));
    files.sort();
    let mut h = Sha256::new();
    for f in files {
        h.update(f.to_string_lossy().as_bytes());
        h.update([0]);
        h.update(hash_file(&dir.join(&f))?.as_bytes());
        h.update([0]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Completion record for one phase over one scope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Marker {
    pub phase: u8,
    pub scope: String,
    pub config_hash: String,
    /// Upstream marker or input file identifiers mapped to their hashes.
    pub inputs: BTreeMap<String, String>,
    pub outputs: String,
    pub seconds: f64,
}

pub fn read_marker(dir: &Path) -> Option<Marker> {
    let text = fs::read_to_string(dir.join(MARKER_FILE)).ok()?;
    serde_json::from_str(&text).ok()
}
