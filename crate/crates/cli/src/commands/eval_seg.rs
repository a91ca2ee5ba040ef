//! Segmentation evaluation: pair predicted and truth label rasters by
//! filename across two directories and report COCO-style AP.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use greenscan_core::segeval;
use greenscan_core::segment::InstanceMaskSet;
use greenscan_core::{io, Error};

use crate::RunStatus;

#[derive(Debug, Args)]
pub struct EvalSegArgs {
    /// Directory of predicted label rasters.
    #[arg(long, value_name = "DIR")]
    pub pred: PathBuf,
    /// Directory of ground-truth label rasters with matching filenames.
    #[arg(long, value_name = "DIR")]
    pub truth: PathBuf,
    /// Output directory for eval.json.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ThresholdAp {
    iou: f64,
    ap: Option<f64>,
}

#[derive(Debug, Serialize)]
struct EvalReport {
    images: usize,
    predictions: usize,
    truths: usize,
    ap50: Option<f64>,
    ap75: Option<f64>,
    mean_ap: Option<f64>,
    per_threshold: Vec<ThresholdAp>,
}

/// Label raster filenames in a directory (scores sidecars are not rasters).
fn raster_names(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let lower = name.to_ascii_lowercase();
        if lower.ends_with(".png") || lower.ends_with(".tif") || lower.ends_with(".tiff") {
            names.insert(name.to_string());
        }
    }
    Ok(names)
}

pub fn run(args: &EvalSegArgs) -> Result<RunStatus> {
    let pred_names = raster_names(&args.pred)?;
    let truth_names = raster_names(&args.truth)?;
    if pred_names.is_empty() && truth_names.is_empty() {
        bail!(Error::NoInput(args.pred.clone()));
    }

    let orphans: Vec<String> = pred_names
        .symmetric_difference(&truth_names)
        .map(|n| {
            if pred_names.contains(n) {
                format!("{n} (prediction without truth)")
            } else {
                format!("{n} (truth without prediction)")
            }
        })
        .collect();
    if !orphans.is_empty() {
        bail!(Error::Pairing(orphans));
    }

    let mut pred_sets: Vec<InstanceMaskSet> = Vec::new();
    let mut truth_sets: Vec<InstanceMaskSet> = Vec::new();
    for name in &pred_names {
        let truth = io::load_label_masks(&args.truth.join(name), None)?;
        let pred = io::load_label_masks(&args.pred.join(name), Some((truth.width, truth.height)))?;
        pred_sets.push(pred);
        truth_sets.push(truth);
    }
    let pairs: Vec<(&InstanceMaskSet, &InstanceMaskSet)> =
        pred_sets.iter().zip(truth_sets.iter()).collect();

    let summary = segeval::evaluate(&pairs)?;
    let report = EvalReport {
        images: pairs.len(),
        predictions: pred_sets.iter().map(|s| s.instances.len()).sum(),
        truths: truth_sets.iter().map(|s| s.instances.len()).sum(),
        ap50: summary.ap50,
        ap75: summary.ap75,
        mean_ap: summary.mean_ap,
        per_threshold: summary
            .per_threshold
            .iter()
            .map(|&(iou, ap)| ThresholdAp { iou, ap })
            .collect(),
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    std::fs::write(
        args.out.join("eval.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;

    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.4}"));
    println!(
        "{} images, {} predictions, {} truths: AP@0.50 = {}, AP@0.75 = {}, mean AP = {}",
        report.images,
        report.predictions,
        report.truths,
        fmt(report.ap50),
        fmt(report.ap75),
        fmt(report.mean_ap)
    );
    Ok(RunStatus::Clean)
}
