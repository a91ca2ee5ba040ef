//! Validation against a ground-truth inventory: geomatch measured trees to
//! surveyed trees, then report correlations, Bland-Altman agreement, a
//! cross-variable correlation matrix, per-group summaries, and plot-ready
//! CSV files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use greenscan_core::inventory::{join_matches, match_measurements, ValidationRow};
use greenscan_core::results;
use greenscan_core::stats;

use crate::commands::load_inventory;
use crate::config::{Config, ConfigOverrides};
use crate::RunStatus;

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// results.csv produced by `process`.
    #[arg(long, value_name = "FILE")]
    pub results: PathBuf,
    /// Inventory file (.csv, .json, or .geojson).
    #[arg(long, value_name = "FILE")]
    pub inventory: PathBuf,
    /// Output directory for report.json and the plot CSVs.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
}

#[derive(Debug, Serialize)]
struct CorrelationReport {
    r: f64,
    p_value: f64,
    n: usize,
    significant: bool,
}

#[derive(Debug, Serialize)]
struct BlandAltmanReport {
    bias: f64,
    sd: f64,
    lower_limit: f64,
    upper_limit: f64,
    n: usize,
    outside_limits: usize,
}

#[derive(Debug, Serialize)]
struct AggregateRow {
    species: String,
    condition: String,
    n: usize,
    ndvi_mean: f64,
    ndvi_sd: Option<f64>,
    ctd_mean: f64,
    ctd_sd: Option<f64>,
}

#[derive(Debug, Serialize)]
struct MatrixReport {
    columns: Vec<&'static str>,
    values: Vec<Vec<Option<f64>>>,
}

#[derive(Debug, Serialize)]
struct ValidationReport {
    config_hash: String,
    alpha: f64,
    n_results: usize,
    n_matched: usize,
    n_unmatched: usize,
    n_duplicate_matches: usize,
    inventory_rejected_rows: usize,
    pearson_ndvi_vs_remote: Option<CorrelationReport>,
    pearson_ctd_vs_condition: Option<CorrelationReport>,
    bland_altman: Option<BlandAltmanReport>,
    correlation_matrix: MatrixReport,
    aggregates: Vec<AggregateRow>,
    /// Human-readable reasons for any null statistic above.
    notes: Vec<String>,
}

fn correlation(
    name: &str,
    x: &[f64],
    y: &[f64],
    alpha: f64,
    notes: &mut Vec<String>,
) -> Option<CorrelationReport> {
    match stats::pearson(x, y) {
        Ok(c) => Some(CorrelationReport {
            r: c.r,
            p_value: c.p_value,
            n: c.n,
            significant: c.significant_at(alpha),
        }),
        Err(e) => {
            notes.push(format!("{name}: {e}"));
            None
        }
    }
}

const MATRIX_COLUMNS: [&str; 5] = [
    "measured_ndvi",
    "measured_ctd",
    "condition",
    "remote_ndvi",
    "canopy_area_m2",
];

pub fn run(args: &ValidateArgs, config_path: Option<&Path>) -> Result<RunStatus> {
    let mut cfg = Config::load(config_path)?;
    args.overrides.apply(&mut cfg);
    let alpha = cfg.validation.alpha;

    let measured = results::read_csv(&args.results)?;
    if measured.is_empty() {
        bail!("no rows in {}", args.results.display());
    }
    let inventory = load_inventory(&args.inventory)?;
    for issue in &inventory.rejected {
        eprintln!(
            "inventory {} row {}: {}",
            args.inventory.display(),
            issue.row,
            issue.reason
        );
    }
    if inventory.records.is_empty() {
        bail!(
            "no usable inventory records in {}",
            args.inventory.display()
        );
    }

    let outcomes = match_measurements(&measured, &inventory.records, cfg.matching.radius_m);
    let rows = join_matches(&measured, &inventory.records, &outcomes);
    if rows.is_empty() {
        bail!(
            "no measured tree matched the inventory within {} m",
            cfg.matching.radius_m
        );
    }

    let measured_ndvi: Vec<f64> = rows.iter().map(|r| r.measured_ndvi).collect();
    let measured_ctd: Vec<f64> = rows.iter().map(|r| r.measured_ctd).collect();
    let condition: Vec<f64> = rows
        .iter()
        .map(|r| cfg.condition_ordinals.value(r.condition))
        .collect();
    let remote_ndvi: Vec<f64> = rows.iter().map(|r| r.remote_ndvi).collect();
    let canopy_area: Vec<f64> = rows.iter().map(|r| r.canopy_area_m2).collect();

    let mut notes = Vec::new();
    let pearson_ndvi_vs_remote = correlation(
        "measured NDVI vs remote NDVI",
        &measured_ndvi,
        &remote_ndvi,
        alpha,
        &mut notes,
    );
    let pearson_ctd_vs_condition = correlation(
        "measured CTD vs condition",
        &measured_ctd,
        &condition,
        alpha,
        &mut notes,
    );
    let bland_altman = match stats::bland_altman(&measured_ndvi, &remote_ndvi) {
        Ok(ba) => Some(BlandAltmanReport {
            bias: ba.bias,
            sd: ba.sd,
            lower_limit: ba.lower_limit,
            upper_limit: ba.upper_limit,
            n: ba.n,
            outside_limits: ba.outside_limits,
        }),
        Err(e) => {
            notes.push(format!("Bland-Altman: {e}"));
            None
        }
    };

    let matrix = stats::correlation_matrix(&[
        measured_ndvi.clone(),
        measured_ctd.clone(),
        condition.clone(),
        remote_ndvi.clone(),
        canopy_area,
    ])?;

    let keyed: Vec<((String, String), (f64, f64))> = rows
        .iter()
        .map(|r| {
            (
                (r.species.clone(), r.condition.as_str().to_string()),
                (r.measured_ndvi, r.measured_ctd),
            )
        })
        .collect();
    let ndvi_groups = stats::group_summaries(keyed.iter().map(|(k, v)| (k.clone(), v.0)).collect());
    let ctd_groups = stats::group_summaries(keyed.iter().map(|(k, v)| (k.clone(), v.1)).collect());
    let aggregates: Vec<AggregateRow> = ndvi_groups
        .iter()
        .map(|(key, ndvi)| {
            let ctd = &ctd_groups[key];
            AggregateRow {
                species: key.0.clone(),
                condition: key.1.clone(),
                n: ndvi.n,
                ndvi_mean: ndvi.mean,
                ndvi_sd: ndvi.sd,
                ctd_mean: ctd.mean,
                ctd_sd: ctd.sd,
            }
        })
        .collect();

    let n_matched = rows.len();
    let report = ValidationReport {
        config_hash: cfg.hash(),
        alpha,
        n_results: measured.len(),
        n_matched,
        n_unmatched: measured.len() - n_matched,
        n_duplicate_matches: rows.iter().filter(|r| r.duplicate_match).count(),
        inventory_rejected_rows: inventory.rejected.len(),
        pearson_ndvi_vs_remote,
        pearson_ctd_vs_condition,
        bland_altman,
        correlation_matrix: MatrixReport {
            columns: MATRIX_COLUMNS.to_vec(),
            values: matrix,
        },
        aggregates,
        notes,
    };

    std::fs::create_dir_all(&args.out)
        .with_context(|| format!("creating output directory {}", args.out.display()))?;
    std::fs::write(
        args.out.join("report.json"),
        serde_json::to_string_pretty(&report).expect("report serializes"),
    )?;
    write_plot_csvs(&args.out, &rows, &cfg)?;

    if let Some(c) = &report.pearson_ndvi_vs_remote {
        println!(
            "NDVI vs remote: r = {:.3}, p = {:.4}, n = {} ({})",
            c.r,
            c.p_value,
            c.n,
            if c.significant {
                "significant"
            } else {
                "not significant"
            }
        );
    }
    if let Some(c) = &report.pearson_ctd_vs_condition {
        println!(
            "CTD vs condition: r = {:.3}, p = {:.4}, n = {}",
            c.r, c.p_value, c.n
        );
    }
    println!(
        "matched {} of {} measured trees ({} duplicates)",
        report.n_matched, report.n_results, report.n_duplicate_matches
    );
    Ok(RunStatus::Clean)
}

fn write_plot_csvs(out: &Path, rows: &[ValidationRow], cfg: &Config) -> Result<()> {
    let mut scatter = csv::Writer::from_path(out.join("scatter.csv"))?;
    scatter.write_record([
        "tree_id",
        "species",
        "condition",
        "condition_ordinal",
        "remote_ndvi",
        "measured_ndvi",
        "measured_ctd",
    ])?;
    for r in rows {
        scatter.write_record([
            r.tree_id.as_str(),
            r.species.as_str(),
            r.condition.as_str(),
            &cfg.condition_ordinals.value(r.condition).to_string(),
            &r.remote_ndvi.to_string(),
            &r.measured_ndvi.to_string(),
            &r.measured_ctd.to_string(),
        ])?;
    }
    scatter.flush()?;

    let mut ba = csv::Writer::from_path(out.join("bland_altman.csv"))?;
    ba.write_record(["tree_id", "mean", "diff"])?;
    for r in rows {
        let mean = (r.measured_ndvi + r.remote_ndvi) / 2.0;
        let diff = r.measured_ndvi - r.remote_ndvi;
        ba.write_record([r.tree_id.as_str(), &mean.to_string(), &diff.to_string()])?;
    }
    ba.flush()?;

    let mut dist = csv::Writer::from_path(out.join("distributions.csv"))?;
    dist.write_record(["species", "condition", "measured_ndvi", "measured_ctd"])?;
    for r in rows {
        dist.write_record([
            r.species.as_str(),
            r.condition.as_str(),
            &r.measured_ndvi.to_string(),
            &r.measured_ctd.to_string(),
        ])?;
    }
    dist.flush()?;
    Ok(())
}
