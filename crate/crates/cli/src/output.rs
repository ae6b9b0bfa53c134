//! Deterministic report files, written atomically.

use std::io::Write;
use std::path::Path;

use greenbound::f64::Grid;
use serde::Serialize;

use crate::error::{CliError, Result};

/// 17 significant digits.
pub fn float(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_error(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes `bytes` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| io_error(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_error(tmp.path(), e))?;
    tmp.as_file().sync_all().map_err(|e| io_error(tmp.path(), e))?;
    tmp.persist(path).map_err(|e| io_error(path, e.error))?;
    Ok(())
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// CSV with a header row, rendered in memory.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new<I, S>(header: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header)?;
        Ok(Self { writer })
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields)?;
        Ok(())
    }

    pub fn save(self, path: &Path) -> Result<()> {
        let bytes = self
            .writer
            .into_inner()
            .map_err(|e| CliError::Csv(e.into_error().into()))?;
        write_atomic(path, &bytes)
    }
}

/// `node_index`, then one coordinate column per dimension, then `rest`.
pub fn node_header(grid: &Grid, rest: &[&str]) -> Vec<String> {
    let mut h = vec!["node_index".to_string(), "x".to_string()];
    if grid.dim() == 2 {
        h.push("y".to_string());
    }
    h.extend(rest.iter().map(|s| s.to_string()));
    h
}

pub fn node_prefix(grid: &Grid, node: usize) -> Vec<String> {
    let x = grid.coords(node);
    let mut r = vec![node.to_string(), float(x[0])];
    if grid.dim() == 2 {
        r.push(float(x[1]));
    }
    r
}
