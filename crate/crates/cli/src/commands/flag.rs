//! Attention flagging: mark measured trees whose corrected NDVI falls
//! strictly below a threshold. With an inventory, each tree's species can
//! select a per-species threshold from the configuration.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use greenscan_core::inventory::match_measurements;
use greenscan_core::results;

use crate::commands::load_inventory;
use crate::config::{Config, ConfigOverrides};
use crate::RunStatus;

#[derive(Debug, Args)]
pub struct FlagArgs {
    /// results.csv produced by `process`.
    #[arg(long, value_name = "FILE")]
    pub results: PathBuf,
    /// Output directory for flags.csv.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Optional inventory for species-specific thresholds.
    #[arg(long, value_name = "FILE")]
    pub inventory: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

pub fn run(args: &FlagArgs, config_path: Option<&Path>) -> Result<RunStatus> {
    let mut cfg = Config::load(config_path)?;
    args.overrides.apply(&mut cfg);

    let measured = results::read_csv(&args.results)?;
    if measured.is_empty() {
        bail!("no rows in {}", args.results.display());
    }

    // species[i] is the matched species of measured row i, when known.
    let mut species: Vec<Option<String>> = vec![None; measured.len()];
    if let Some(inv_path) = &args.inventory {
        let inventory = load_inventory(inv_path)?;
        for issue in &inventory.rejected {
            eprintln!(
                "inventory {} row {}: {}",
                inv_path.display(),
                issue.row,
                issue.reason
            );
        }
        let outcomes = match_measurements(&measured, &inventory.records, cfg.matching.radius_m);
        for o in &outcomes {
            if let Some(ii) = o.inventory_index {
                species[o.measured_index] = Some(inventory.records[ii].species.clone());
            }
        }
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    let mut w = csv::Writer::from_path(args.out.join("flags.csv"))?;
    w.write_record([
        "capture_id",
        "instance_id",
        "species",
        "ndvi_corrected_mean",
        "threshold",
        "status",
    ])?;
    let mut attention = 0usize;
    for (row, sp) in measured.iter().zip(&species) {
        let threshold = sp
            .as_deref()
            .and_then(|s| cfg.flagging.species_thresholds.get(s).copied())
            .unwrap_or(cfg.flagging.ndvi_threshold);
        let needs_attention = row.ndvi_corrected_mean < threshold;
        if needs_attention {
            attention += 1;
        }
        w.write_record([
            row.capture_id.as_str(),
            &row.instance_id.to_string(),
            sp.as_deref().unwrap_or(""),
            &row.ndvi_corrected_mean.to_string(),
            &threshold.to_string(),
            if needs_attention { "attention" } else { "ok" },
        ])?;
    }
    w.flush()?;

    println!(
        "{attention} of {} trees flagged for attention",
        measured.len()
    );
    Ok(RunStatus::Clean)
}
