//! Ground-truth tree inventory: CSV/GeoJSON ingestion with per-row
//! diagnostics, haversine distances, and nearest-within-radius matching of
//! measured trees to inventory trees.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::results::MeasuredTree;
use crate::scalar::Real;

/// Surveyed health class, ordered worst to best.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    Poor,
    Fair,
    Good,
}

impl Condition {
    /// Default ordinal coding for correlation work: poor 0, fair 1, good 2.
    pub fn ordinal(self) -> u8 {
        match self {
            Condition::Poor => 0,
            Condition::Fair => 1,
            Condition::Good => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::Poor => "poor",
            Condition::Fair => "fair",
            Condition::Good => "good",
        }
    }
}

impl std::str::FromStr for Condition {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "poor" => Ok(Condition::Poor),
            "fair" => Ok(Condition::Fair),
            "good" => Ok(Condition::Good),
            other => Err(format!(
                "unknown condition {other:?} (expected poor/fair/good)"
            )),
        }
    }
}

/// One surveyed tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InventoryRecord {
    pub tree_id: String,
    pub species: String,
    pub condition: Condition,
    pub remote_ndvi: f64,
    pub canopy_area_m2: f64,
    pub latitude: f64,
    pub longitude: f64,
}

impl InventoryRecord {
    fn validate(&self) -> std::result::Result<(), String> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(format!("latitude {} out of range", self.latitude));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(format!("longitude {} out of range", self.longitude));
        }
        if !(-1.0..=1.0).contains(&self.remote_ndvi) {
            return Err(format!("remote_ndvi {} out of [-1, 1]", self.remote_ndvi));
        }
        if !self.canopy_area_m2.is_finite() || self.canopy_area_m2 < 0.0 {
            return Err(format!("canopy_area_m2 {} invalid", self.canopy_area_m2));
        }
        if self.tree_id.is_empty() {
            return Err("empty tree_id".into());
        }
        Ok(())
    }
}

/// A row or feature that failed to parse or validate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowIssue {
    /// 1-based CSV line (header is line 1) or 0-based GeoJSON feature index.
    pub row: u64,
    pub reason: String,
}

/// Ingestion result: good records plus diagnostics for everything skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryLoad {
    pub records: Vec<InventoryRecord>,
    pub rejected: Vec<RowIssue>,
}

/// Reads an inventory CSV with columns tree_id, species, condition,
/// remote_ndvi, canopy_area_m2, latitude, longitude. Bad rows are collected,
/// not fatal; an unreadable file or header is.
pub fn load_csv(path: &Path) -> Result<InventoryLoad> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Schema {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?
        .clone();
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = (i + 2) as u64; // header occupies line 1
        let parsed: std::result::Result<InventoryRecord, String> = rec
            .map_err(|e| e.to_string())
            .and_then(|r| r.deserialize(Some(&headers)).map_err(|e| e.to_string()));
        match parsed {
            Ok(record) => match record.validate() {
                Ok(()) => records.push(record),
                Err(reason) => rejected.push(RowIssue { row: line, reason }),
            },
            Err(reason) => rejected.push(RowIssue { row: line, reason }),
        }
    }
    Ok(InventoryLoad { records, rejected })
}

#[derive(Deserialize)]
struct GeoProperties {
    tree_id: String,
    species: String,
    condition: Condition,
    remote_ndvi: f64,
    canopy_area_m2: f64,
}

/// Reads a GeoJSON FeatureCollection of Point features whose properties
/// carry the same fields as the CSV columns. GeoJSON coordinates are
/// [longitude, latitude]. Bad features are collected, not fatal.
pub fn load_geojson(path: &Path) -> Result<InventoryLoad> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let doc: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Schema {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    if doc["type"] != "FeatureCollection" {
        return Err(Error::Schema {
            path: path.to_path_buf(),
            reason: "expected a FeatureCollection".into(),
        });
    }
    let features = doc["features"].as_array().ok_or_else(|| Error::Schema {
        path: path.to_path_buf(),
        reason: "features must be an array".into(),
    })?;

    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (i, feature) in features.iter().enumerate() {
        match parse_feature(feature) {
            Ok(record) => match record.validate() {
                Ok(()) => records.push(record),
                Err(reason) => rejected.push(RowIssue {
                    row: i as u64,
                    reason,
                }),
            },
            Err(reason) => rejected.push(RowIssue {
                row: i as u64,
                reason,
            }),
        }
    }
    Ok(InventoryLoad { records, rejected })
}

fn parse_feature(feature: &serde_json::Value) -> std::result::Result<InventoryRecord, String> {
    let geometry = &feature["geometry"];
    if geometry["type"] != "Point" {
        return Err(format!("geometry type {} is not Point", geometry["type"]));
    }
    let coords = geometry["coordinates"]
        .as_array()
        .filter(|c| c.len() >= 2)
        .ok_or("coordinates must be [longitude, latitude]")?;
    let longitude = coords[0].as_f64().ok_or("non-numeric longitude")?;
    let latitude = coords[1].as_f64().ok_or("non-numeric latitude")?;
    let props: GeoProperties = serde_json::from_value(feature["properties"].clone())
        .map_err(|e| format!("properties: {e}"))?;
    Ok(InventoryRecord {
        tree_id: props.tree_id,
        species: props.species,
        condition: props.condition,
        remote_ndvi: props.remote_ndvi,
        canopy_area_m2: props.canopy_area_m2,
        latitude,
        longitude,
    })
}

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Great-circle distance between two (latitude, longitude) points in degrees,
/// in meters, by the haversine formula.
pub fn haversine_m<F: Real>(lat1: F, lon1: F, lat2: F, lon2: F) -> F {
    let rad = |deg: F| deg * F::from_f64_lossy(std::f64::consts::PI / 180.0);
    let (p1, p2) = (rad(lat1), rad(lat2));
    let dp = rad(lat2 - lat1);
    let dl = rad(lon2 - lon1);
    let two = F::from_channel(2);
    let sp = (dp / two).sin();
    let sl = (dl / two).sin();
    let a = sp * sp + p1.cos() * p2.cos() * sl * sl;
    let a = if a > F::one() { F::one() } else { a };
    two * F::from_f64_lossy(EARTH_RADIUS_M) * a.sqrt().asin()
}

/// Default search radius for geomatching, in meters.
pub const DEFAULT_MATCH_RADIUS_M: f64 = 25.0;

/// Outcome of matching one measured tree against the inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub measured_index: usize,
    /// Index into the inventory, or `None` if nothing lies within the radius.
    pub inventory_index: Option<usize>,
    pub distance_m: Option<f64>,
    /// True when the matched inventory tree was claimed by more than one
    /// measured tree; such rows are kept but should be reviewed.
    pub duplicate: bool,
}

/// Matches each measured tree to its nearest inventory tree within
/// `radius_m`. Distance ties break on the lexicographically smaller tree_id.
/// Unmatched measurements are kept with no inventory index; inventory trees
/// claimed more than once are flagged on every claiming row.
pub fn match_measurements(
    measured: &[MeasuredTree],
    inventory: &[InventoryRecord],
    radius_m: f64,
) -> Vec<MatchOutcome> {
    let mut outcomes: Vec<MatchOutcome> = measured
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let mut best: Option<(usize, f64)> = None;
            for (ii, inv) in inventory.iter().enumerate() {
                let d = haversine_m(m.latitude, m.longitude, inv.latitude, inv.longitude);
                if d > radius_m {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bi, bd)) => d < bd || (d == bd && inv.tree_id < inventory[bi].tree_id),
                };
                if better {
                    best = Some((ii, d));
                }
            }
            MatchOutcome {
                measured_index: mi,
                inventory_index: best.map(|(i, _)| i),
                distance_m: best.map(|(_, d)| d),
                duplicate: false,
            }
        })
        .collect();

    let mut claims = std::collections::HashMap::new();
    for o in &outcomes {
        if let Some(ii) = o.inventory_index {
            *claims.entry(ii).or_insert(0usize) += 1;
        }
    }
    for o in &mut outcomes {
        if let Some(ii) = o.inventory_index {
            o.duplicate = claims[&ii] > 1;
        }
    }
    outcomes
}

/// A measured tree joined with its inventory ground truth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationRow {
    pub tree_id: String,
    pub species: String,
    pub condition: Condition,
    pub remote_ndvi: f64,
    pub canopy_area_m2: f64,
    pub measured_ndvi: f64,
    pub measured_ctd: f64,
    pub distance_m: f64,
    pub duplicate_match: bool,
}

/// Joins matched rows; unmatched measurements are dropped here (they remain
/// visible in the [`MatchOutcome`] list).
pub fn join_matches(
    measured: &[MeasuredTree],
    inventory: &[InventoryRecord],
    outcomes: &[MatchOutcome],
) -> Vec<ValidationRow> {
    outcomes
        .iter()
        .filter_map(|o| {
            let ii = o.inventory_index?;
            let inv = &inventory[ii];
            let m = &measured[o.measured_index];
            Some(ValidationRow {
                tree_id: inv.tree_id.clone(),
                species: inv.species.clone(),
                condition: inv.condition,
                remote_ndvi: inv.remote_ndvi,
                canopy_area_m2: inv.canopy_area_m2,
                measured_ndvi: m.ndvi_corrected_mean,
                measured_ctd: m.ctd_c,
                distance_m: o.distance_m.expect("matched rows carry a distance"),
                duplicate_match: o.duplicate,
            })
        })
        .collect()
}
