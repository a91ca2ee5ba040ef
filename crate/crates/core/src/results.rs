//! Per-tree measurement rows produced by the pipeline, with CSV/JSON I/O.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One detected tree with its location and indexes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasuredTree {
    pub capture_id: String,
    pub instance_id: u32,
    /// Capture location; individual crowns are not geolocated separately.
    pub latitude: f64,
    pub longitude: f64,
    pub ndvi_corrected_mean: f64,
    pub ctd_c: f64,
    pub canopy_pixel_count: usize,
}

pub fn write_csv(path: &Path, rows: &[MeasuredTree]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_csv(path: &Path) -> Result<Vec<MeasuredTree>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.map_err(|e| csv_err(path, e))?);
    }
    Ok(rows)
}

pub fn write_json(path: &Path, rows: &[MeasuredTree]) -> Result<()> {
    let text = serde_json::to_string_pretty(rows).expect("rows serialize");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        reason: e.to_string(),
    }
}
