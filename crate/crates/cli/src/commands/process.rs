//! Batch processing: discover capture triplets, run the per-capture
//! pipeline on a worker pool, and write results plus a run manifest.
//!
//! A capture triplet is `<id>_rgn.<ext>`, `<id>_thermal.<ext>`, and
//! `<id>_meta.json` in one directory, where `<ext>` is png, tif, or tiff.
//! Failures are isolated per capture: one bad file never aborts the batch.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;

use greenscan_core::pipeline::{process_capture, to_measured_rows, PipelineConfig};
use greenscan_core::results::MeasuredTree;
use greenscan_core::{io, Error};

use crate::config::{Config, ConfigOverrides};
use crate::manifest::{FailureNote, RunManifest};
use crate::RunStatus;

#[derive(Debug, Args)]
pub struct ProcessArgs {
    /// Directory containing capture triplets.
    #[arg(long, value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory for results.csv/json and manifest.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Worker threads for the capture pool (default: one per core).
    #[arg(long, value_name = "N")]
    pub workers: Option<usize>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

/// The files found for one capture id; anything may be missing.
#[derive(Debug, Default, Clone)]
struct CaptureFiles {
    rgn: Option<PathBuf>,
    thermal: Option<PathBuf>,
    meta: Option<PathBuf>,
}

const RASTER_EXTS: [&str; 3] = ["png", "tif", "tiff"];

/// Groups directory entries into capture triplets by id, sorted by id.
fn discover_captures(dir: &Path) -> Result<Vec<(String, CaptureFiles)>> {
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading input directory {}", dir.display()))?;
    let mut map: BTreeMap<String, CaptureFiles> = BTreeMap::new();
    for entry in entries {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        if let Some(id) = name.strip_suffix("_meta.json") {
            map.entry(id.to_string()).or_default().meta = Some(path.clone());
            continue;
        }
        for ext in RASTER_EXTS {
            if let Some(id) = name.strip_suffix(&format!("_rgn.{ext}")) {
                map.entry(id.to_string()).or_default().rgn = Some(path.clone());
            } else if let Some(id) = name.strip_suffix(&format!("_thermal.{ext}")) {
                map.entry(id.to_string()).or_default().thermal = Some(path.clone());
            }
        }
    }
    Ok(map.into_iter().collect())
}

fn process_one(
    id: &str,
    files: &CaptureFiles,
    cfg: &PipelineConfig,
) -> std::result::Result<Vec<MeasuredTree>, String> {
    let rgn = files.rgn.as_deref().ok_or("missing RGN raster")?;
    let thermal = files.thermal.as_deref().ok_or("missing thermal raster")?;
    let meta = files.meta.as_deref().ok_or("missing metadata sidecar")?;
    let pair = io::load_capture(rgn, thermal, meta).map_err(|e| e.to_string())?;
    let result = process_capture(&pair, cfg).map_err(|e| e.to_string())?;
    Ok(to_measured_rows(id, &pair.meta, &result))
}

pub fn run(args: &ProcessArgs, config_path: Option<&Path>) -> Result<RunStatus> {
    let mut cfg = Config::load(config_path)?;
    args.overrides.apply(&mut cfg);
    let pipeline_cfg = cfg.pipeline()?;

    let captures = discover_captures(&args.input)?;
    if captures.is_empty() {
        bail!(Error::NoInput(args.input.clone()));
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.workers.unwrap_or(0))
        .build()
        .context("building worker pool")?;
    let outcomes: Vec<(String, std::result::Result<Vec<MeasuredTree>, String>)> =
        pool.install(|| {
            captures
                .par_iter()
                .map(|(id, files)| (id.clone(), process_one(id, files, &pipeline_cfg)))
                .collect()
        });

    let mut rows: Vec<MeasuredTree> = Vec::new();
    let mut with_detections = 0usize;
    let mut empty = 0usize;
    let mut failures: Vec<FailureNote> = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(capture_rows) if capture_rows.is_empty() => empty += 1,
            Ok(capture_rows) => {
                with_detections += 1;
                rows.extend(capture_rows);
            }
            Err(error) => {
                eprintln!("capture {id}: {error}");
                failures.push(FailureNote {
                    capture_id: id,
                    error,
                });
            }
        }
    }

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    greenscan_core::results::write_csv(&args.out.join("results.csv"), &rows)?;
    greenscan_core::results::write_json(&args.out.join("results.json"), &rows)?;

    let manifest = RunManifest {
        command: "process".into(),
        config_hash: cfg.hash(),
        captures_in: captures.len(),
        captures_with_detections: with_detections,
        captures_empty: empty,
        captures_failed: failures.len(),
        trees_out: rows.len(),
        failures,
    };
    manifest.write(&args.out.join("manifest.json"))?;

    println!(
        "processed {} captures: {} with detections, {} empty, {} failed; {} trees",
        manifest.captures_in,
        manifest.captures_with_detections,
        manifest.captures_empty,
        manifest.captures_failed,
        manifest.trees_out
    );
    Ok(if manifest.captures_failed > 0 {
        RunStatus::Partial
    } else {
        RunStatus::Clean
    })
}
