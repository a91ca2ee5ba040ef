//! Subcommand implementations.

pub mod eval_seg;
pub mod flag;
pub mod process;
pub mod synth;
pub mod validate;

use std::path::Path;

use anyhow::{bail, Result};
use greenscan_core::inventory::{self, InventoryLoad};

/// Loads an inventory file, choosing the parser by extension.
pub fn load_inventory(path: &Path) -> Result<InventoryLoad> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let load = match ext.as_str() {
        "csv" => inventory::load_csv(path)?,
        "json" | "geojson" => inventory::load_geojson(path)?,
        other => bail!(
            "unsupported inventory format {:?} for {} (expected .csv, .json, or .geojson)",
            other,
            path.display()
        ),
    };
    Ok(load)
}
