//! File writing helpers.

use std::io::Write as _;
use std::path::Path;

use tempfile::NamedTempFile;

use crate::error::{AppError, Result};

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(AppError::io(dir))?;
    tmp.write_all(bytes).map_err(AppError::io(path))?;
    tmp.persist(path).map_err(|e| AppError::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

/// Serializes rows as CSV with a header line.
pub fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| AppError::Config(format!("csv encoding: {e}"));
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(row).map_err(to_err)?;
    }
    w.into_inner()
        .map_err(|e| AppError::Config(format!("csv encoding: {e}")))
}

pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    write_atomic(path, &csv_bytes(header, rows)?)
}

/// Header and records of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(false)
            .from_path(path)
            .map_err(|e| AppError::format(path, e))?;
        let mut records = r.records();
        let header = match records.next() {
            Some(rec) => rec
                .map_err(|e| AppError::format(path, e))?
                .iter()
                .map(|s| s.trim().to_string())
                .collect(),
            None => Vec::new(),
        };
        let rows = records
            .map(|rec| {
                rec.map(|r| r.iter().map(|s| s.trim().to_string()).collect())
                    .map_err(|e| AppError::format(path, e))
            })
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Self { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}
