//! Layered run configuration: built-in defaults, then an optional TOML file,
//! then command-line overrides. The effective configuration is hashed so a
//! run manifest can prove which settings produced an output.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use greenscan_core::inventory::Condition;
use greenscan_core::pipeline::PipelineConfig;
use greenscan_core::register::{RegistrationParams, Resampling};
use greenscan_core::segment::SegmentationParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegistrationSection {
    pub translate_x: f64,
    pub translate_y: f64,
    pub zoom: f64,
    pub resampling: Resampling,
}

impl Default for RegistrationSection {
    fn default() -> Self {
        Self {
            translate_x: 50.0,
            translate_y: 150.0,
            zoom: 0.57,
            resampling: Resampling::Bilinear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationSection {
    pub ndvi_cutoff: f64,
    pub min_instance_area: usize,
    pub median_kernel: usize,
}

impl Default for SegmentationSection {
    fn default() -> Self {
        Self {
            ndvi_cutoff: 0.02,
            min_instance_area: 50,
            median_kernel: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalSection {
    /// Range used when generating synthetic captures; real captures carry
    /// their own range in the metadata sidecar.
    pub t_min_c: f64,
    pub t_max_c: f64,
}

impl Default for ThermalSection {
    fn default() -> Self {
        Self {
            t_min_c: -10.0,
            t_max_c: 40.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchingSection {
    pub radius_m: f64,
}

impl Default for MatchingSection {
    fn default() -> Self {
        Self { radius_m: 25.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidationSection {
    pub alpha: f64,
}

impl Default for ValidationSection {
    fn default() -> Self {
        Self { alpha: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrdinalSection {
    pub poor: i64,
    pub fair: i64,
    pub good: i64,
}

impl Default for OrdinalSection {
    fn default() -> Self {
        Self {
            poor: 0,
            fair: 1,
            good: 2,
        }
    }
}

impl OrdinalSection {
    pub fn value(&self, c: Condition) -> f64 {
        match c {
            Condition::Poor => self.poor as f64,
            Condition::Fair => self.fair as f64,
            Condition::Good => self.good as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlaggingSection {
    /// Trees strictly below this corrected NDVI are flagged for attention.
    pub ndvi_threshold: f64,
    /// Optional per-species thresholds, used when an inventory is joined.
    pub species_thresholds: BTreeMap<String, f64>,
}

impl Default for FlaggingSection {
    fn default() -> Self {
        Self {
            ndvi_threshold: 0.2,
            species_thresholds: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSection {
    pub thermal_width: usize,
    pub thermal_height: usize,
}

impl Default for SynthSection {
    fn default() -> Self {
        Self {
            thermal_width: 160,
            thermal_height: 120,
        }
    }
}

/// The full effective configuration.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub registration: RegistrationSection,
    pub segmentation: SegmentationSection,
    pub thermal: ThermalSection,
    pub matching: MatchingSection,
    pub validation: ValidationSection,
    pub condition_ordinals: OrdinalSection,
    pub flagging: FlaggingSection,
    pub synth: SynthSection,
}

impl Config {
    /// Defaults, overlaid with the TOML file if one is given.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config {}", p.display()))?;
                toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
            }
        }
    }

    pub fn pipeline(&self) -> Result<PipelineConfig> {
        let registration = RegistrationParams::new(
            self.registration.translate_x,
            self.registration.translate_y,
            self.registration.zoom,
        )?;
        Ok(PipelineConfig {
            registration,
            resampling: self.registration.resampling,
            segmentation: SegmentationParams {
                ndvi_cutoff: self.segmentation.ndvi_cutoff,
                min_instance_area: self.segmentation.min_instance_area,
                median_kernel: self.segmentation.median_kernel,
            },
        })
    }

    /// SHA-256 of the canonical TOML rendering of the effective config.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Flag-level overrides shared by the subcommands; every config value has a
/// corresponding flag.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigOverrides {
    /// Rightward shift of the RGN content, in thermal pixels.
    #[arg(long, value_name = "PX")]
    pub translate_x: Option<f64>,
    /// Upward shift of the RGN content, in thermal pixels.
    #[arg(long, value_name = "PX")]
    pub translate_y: Option<f64>,
    /// Center zoom factor in (0, 1].
    #[arg(long, value_name = "FACTOR")]
    pub zoom: Option<f64>,
    /// Warp resampling: bilinear or nearest.
    #[arg(long, value_name = "MODE")]
    pub resampling: Option<Resampling>,
    /// Minimum raw NDVI for a canopy pixel.
    #[arg(long, value_name = "NDVI")]
    pub ndvi_cutoff: Option<f64>,
    /// Minimum despeckled instance area in pixels.
    #[arg(long, value_name = "PX")]
    pub min_instance_area: Option<usize>,
    /// Odd side length of the median despeckle window.
    #[arg(long, value_name = "PX")]
    pub median_kernel: Option<usize>,
    /// Synthetic-capture temperature range, low end (°C).
    #[arg(long, value_name = "C")]
    pub t_min: Option<f64>,
    /// Synthetic-capture temperature range, high end (°C).
    #[arg(long, value_name = "C")]
    pub t_max: Option<f64>,
    /// Geomatching search radius in meters.
    #[arg(long, value_name = "M")]
    pub radius: Option<f64>,
    /// Significance level for correlation tests.
    #[arg(long, value_name = "ALPHA")]
    pub alpha: Option<f64>,
    /// Ordinal coding for condition "poor".
    #[arg(long, value_name = "N")]
    pub ordinal_poor: Option<i64>,
    /// Ordinal coding for condition "fair".
    #[arg(long, value_name = "N")]
    pub ordinal_fair: Option<i64>,
    /// Ordinal coding for condition "good".
    #[arg(long, value_name = "N")]
    pub ordinal_good: Option<i64>,
    /// Corrected-NDVI attention threshold for flagging.
    #[arg(long, value_name = "NDVI")]
    pub ndvi_threshold: Option<f64>,
}

impl ConfigOverrides {
    pub fn apply(&self, cfg: &mut Config) {
        macro_rules! set {
            ($flag:expr, $slot:expr) => {
                if let Some(v) = $flag {
                    $slot = v;
                }
            };
        }
        set!(self.translate_x, cfg.registration.translate_x);
        set!(self.translate_y, cfg.registration.translate_y);
        set!(self.zoom, cfg.registration.zoom);
        set!(self.resampling, cfg.registration.resampling);
        set!(self.ndvi_cutoff, cfg.segmentation.ndvi_cutoff);
        set!(self.min_instance_area, cfg.segmentation.min_instance_area);
        set!(self.median_kernel, cfg.segmentation.median_kernel);
        set!(self.t_min, cfg.thermal.t_min_c);
        set!(self.t_max, cfg.thermal.t_max_c);
        set!(self.radius, cfg.matching.radius_m);
        set!(self.alpha, cfg.validation.alpha);
        set!(self.ordinal_poor, cfg.condition_ordinals.poor);
        set!(self.ordinal_fair, cfg.condition_ordinals.fair);
        set!(self.ordinal_good, cfg.condition_ordinals.good);
        set!(self.ndvi_threshold, cfg.flagging.ndvi_threshold);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    #[test]
    fn defaults_match_field_settings() {
        let c = Config::default();
        assert_eq!(c.registration.translate_x, 50.0);
        assert_eq!(c.registration.translate_y, 150.0);
        assert_eq!(c.registration.zoom, 0.57);
        assert_eq!(c.segmentation.ndvi_cutoff, 0.02);
        assert_eq!(c.segmentation.min_instance_area, 50);
        assert_eq!(c.segmentation.median_kernel, 3);
        assert_eq!(c.thermal.t_min_c, -10.0);
        assert_eq!(c.thermal.t_max_c, 40.0);
        assert_eq!(c.matching.radius_m, 25.0);
        assert_eq!(c.condition_ordinals.value(Condition::Fair), 1.0);
        assert_eq!(c.flagging.ndvi_threshold, 0.2);
    }

    #[test]
    fn toml_overlay_and_flag_overrides() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("cfg.toml");
        std::fs::write(
            &p,
            "[registration]\nzoom = 0.8\n\n[matching]\nradius_m = 10.0\n",
        )
        .unwrap();
        let mut cfg = Config::load(Some(&p)).unwrap();
        assert_eq!(cfg.registration.zoom, 0.8);
        assert_eq!(
            cfg.registration.translate_x, 50.0,
            "untouched fields keep defaults"
        );
        assert_eq!(cfg.matching.radius_m, 10.0);
        let overrides = ConfigOverrides {
            zoom: Some(0.9),
            radius: Some(5.0),
            ..Default::default()
        };
        overrides.apply(&mut cfg);
        assert_eq!(cfg.registration.zoom, 0.9);
        assert_eq!(cfg.matching.radius_m, 5.0);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("cfg.toml");
        std::fs::write(&p, "[registration]\nzom = 0.8\n").unwrap();
        assert!(Config::load(Some(&p)).is_err());
    }

    #[test]
    fn hash_tracks_content_not_identity() {
        let a = Config::default();
        let mut b = Config::default();
        assert_eq!(a.hash(), b.hash());
        b.segmentation.ndvi_cutoff = 0.03;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn pipeline_config_carries_settings_over() {
        let mut cfg = Config::default();
        cfg.registration.translate_x = 0.0;
        cfg.registration.translate_y = 0.0;
        cfg.registration.zoom = 1.0;
        let p = cfg.pipeline().unwrap();
        assert_eq!(p.segmentation.min_instance_area, 50);
        assert_eq!(p.registration.zoom, 1.0);
        cfg.registration.zoom = 1.7;
        assert!(cfg.pipeline().is_err(), "invalid zoom surfaces on use");
    }
}
