//! Synthetic capture generator with exact ground truth.
//!
//! Scenes are described in thermal-frame coordinates: circular canopies with
//! a target NDVI and canopy temperature, optional trunks at air temperature,
//! and sky elsewhere. The thermal raster is painted directly; the RGN raster
//! is painted by mapping each RGN pixel through the registration forward map,
//! so after registration the two frames line up. With identity registration
//! and equal dimensions this reduces to painting both frames alike.
//!
//! Truth masks are the exact painted canopy disks, along with the target and
//! the quantization-limited achieved index values.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indexes::{ndvi, pixel_temperature};
use crate::raster::{BandOrder, BitMask, CaptureMeta, CapturePair, Plane, RgnImage, ThermalImage};
use crate::register::RegistrationParams;

/// A circular canopy, optionally with a trunk below it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeSpec {
    /// Crown center in thermal-frame pixels.
    pub center_x: f64,
    pub center_y: f64,
    /// Crown radius in thermal-frame pixels; at least 5 so despeckling and
    /// the instance area floor cannot erase a tree.
    pub radius: f64,
    /// Leaf NDVI in [0.05, 0.99].
    pub target_ndvi: f64,
    pub canopy_temperature_c: f64,
    pub trunk: bool,
}

/// Full scene description; deterministic given `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub thermal_width: usize,
    pub thermal_height: usize,
    pub rgn_width: usize,
    pub rgn_height: usize,
    pub air_temperature_c: f64,
    pub t_min_c: f64,
    pub t_max_c: f64,
    /// Gaussian noise sigma in 8-bit counts, applied to every channel.
    pub noise_sigma: f64,
    pub seed: u64,
    pub registration: RegistrationParams,
    pub latitude: f64,
    pub longitude: f64,
    pub trees: Vec<TreeSpec>,
}

/// Sky pixels: equal red and NIR, so NDVI is exactly zero.
const SKY_RED: u8 = 120;
const SKY_NIR: u8 = 120;
const SKY_GREEN: u8 = 140;
/// Bark reflects more red than NIR: NDVI (40-60)/100 = -0.2.
const TRUNK_RED: u8 = 60;
const TRUNK_NIR: u8 = 40;
const TRUNK_GREEN: u8 = 55;
const CANOPY_GREEN: u8 = 90;

const MIN_RADIUS: f64 = 5.0;
const PLACEMENT_MARGIN: f64 = 2.0;
const SEPARATION_GAP: f64 = 4.0;

impl SceneSpec {
    /// An empty identity-registration scene at the given thermal size.
    pub fn base(thermal_width: usize, thermal_height: usize) -> Self {
        Self {
            thermal_width,
            thermal_height,
            rgn_width: thermal_width,
            rgn_height: thermal_height,
            air_temperature_c: 5.0,
            t_min_c: -10.0,
            t_max_c: 40.0,
            noise_sigma: 0.0,
            seed: 0,
            registration: RegistrationParams::identity(),
            latitude: 42.37,
            longitude: -71.11,
            trees: Vec::new(),
        }
    }

    /// Randomly places `n_trees` non-overlapping trees. Deterministic in
    /// `seed`; the same seed also drives the pixel noise.
    pub fn random(
        seed: u64,
        n_trees: usize,
        noise_sigma: f64,
        thermal_width: usize,
        thermal_height: usize,
    ) -> Result<Self> {
        let mut spec = Self::base(thermal_width, thermal_height);
        spec.seed = seed;
        spec.noise_sigma = noise_sigma;
        // Placement uses a different stream than the pixel noise.
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce4e5);
        let max_r = 12.0f64.min(thermal_width.min(thermal_height) as f64 / 6.0);
        for _ in 0..n_trees {
            let mut placed = false;
            for _ in 0..1000 {
                let radius = rng.gen_range(MIN_RADIUS..=max_r);
                let pad = radius + PLACEMENT_MARGIN;
                let cx = rng.gen_range(pad..thermal_width as f64 - 1.0 - pad);
                let cy = rng.gen_range(pad..thermal_height as f64 - 1.0 - pad);
                let clear = spec.trees.iter().all(|t| {
                    let d = ((t.center_x - cx).powi(2) + (t.center_y - cy).powi(2)).sqrt();
                    d >= t.radius + radius + SEPARATION_GAP
                });
                if clear {
                    spec.trees.push(TreeSpec {
                        center_x: cx,
                        center_y: cy,
                        radius,
                        target_ndvi: rng.gen_range(0.1..0.9),
                        canopy_temperature_c: rng.gen_range(-2.0..25.0),
                        trunk: rng.gen_bool(0.5),
                    });
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(Error::SceneSpec(format!(
                    "could not place {n_trees} separated trees in {thermal_width}x{thermal_height}"
                )));
            }
        }
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::SceneSpec(msg));
        if self.thermal_width < 16 || self.thermal_height < 16 {
            return err(format!(
                "thermal frame {}x{} is too small",
                self.thermal_width, self.thermal_height
            ));
        }
        if self.rgn_width == 0 || self.rgn_height == 0 {
            return err("RGN frame must be non-empty".into());
        }
        if self.t_min_c.partial_cmp(&self.t_max_c) != Some(std::cmp::Ordering::Less) {
            return err(format!(
                "temperature range ({}, {}) must increase",
                self.t_min_c, self.t_max_c
            ));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return err(format!("noise sigma {} invalid", self.noise_sigma));
        }
        RegistrationParams::new(
            self.registration.translate_x,
            self.registration.translate_y,
            self.registration.zoom,
        )?;
        let thermal_dims = (self.thermal_width, self.thermal_height);
        for (i, t) in self.trees.iter().enumerate() {
            if t.radius < MIN_RADIUS {
                return err(format!(
                    "tree {i} radius {} below minimum {MIN_RADIUS}",
                    t.radius
                ));
            }
            if !(0.05..=0.99).contains(&t.target_ndvi) {
                return err(format!(
                    "tree {i} target NDVI {} outside [0.05, 0.99]",
                    t.target_ndvi
                ));
            }
            if t.canopy_temperature_c < self.t_min_c || t.canopy_temperature_c > self.t_max_c {
                return err(format!(
                    "tree {i} canopy temperature {} outside range ({}, {})",
                    t.canopy_temperature_c, self.t_min_c, self.t_max_c
                ));
            }
            let pad = t.radius + PLACEMENT_MARGIN;
            if t.center_x < pad
                || t.center_x > self.thermal_width as f64 - 1.0 - pad
                || t.center_y < pad
                || t.center_y > self.thermal_height as f64 - 1.0 - pad
            {
                return err(format!("tree {i} does not fit inside the frame"));
            }
            // The whole crown must sit inside the registration footprint or
            // the RGN raster cannot carry it.
            for (dx, dy) in [
                (-t.radius, 0.0),
                (t.radius, 0.0),
                (0.0, -t.radius),
                (0.0, t.radius),
            ] {
                let (x, y) = (t.center_x + dx, t.center_y + dy);
                if !self.registration.in_footprint(
                    x.round().clamp(0.0, (self.thermal_width - 1) as f64) as usize,
                    y.round().clamp(0.0, (self.thermal_height - 1) as f64) as usize,
                    thermal_dims,
                ) {
                    return err(format!(
                        "tree {i} extends outside the registration footprint"
                    ));
                }
            }
            for (j, u) in self.trees.iter().enumerate().skip(i + 1) {
                let d =
                    ((t.center_x - u.center_x).powi(2) + (t.center_y - u.center_y).powi(2)).sqrt();
                if d < t.radius + u.radius + SEPARATION_GAP {
                    return err(format!("trees {i} and {j} are too close ({d:.1} px apart)"));
                }
            }
        }
        Ok(())
    }
}

/// What occupies a thermal-frame position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Content {
    Sky,
    Canopy(usize),
    Trunk(usize),
}

fn classify(trees: &[TreeSpec], x: f64, y: f64) -> Content {
    for (i, t) in trees.iter().enumerate() {
        let (dx, dy) = (x - t.center_x, y - t.center_y);
        if dx * dx + dy * dy <= t.radius * t.radius {
            return Content::Canopy(i);
        }
        if t.trunk {
            let half_w = (t.radius / 3.0).max(1.0);
            if (x - t.center_x).abs() <= half_w
                && y >= t.center_y + t.radius
                && y <= t.center_y + 2.0 * t.radius
            {
                return Content::Trunk(i);
            }
        }
    }
    Content::Sky
}

/// 8-bit (red, nir) pair whose NDVI lands within 0.02 of `v`.
///
/// Red is adaptive: min(100, ⌊255(1−v)/(1+v)⌋), at least 1, which keeps
/// NIR = Red·(1+v)/(1−v) within 8 bits across the whole valid range.
pub fn canopy_channels(v: f64) -> Result<(u8, u8)> {
    if !(0.0..1.0).contains(&v) {
        return Err(Error::SceneSpec(format!("canopy NDVI {v} outside [0, 1)")));
    }
    let red = (255.0 * (1.0 - v) / (1.0 + v)).floor().clamp(1.0, 100.0);
    let nir = (red * (1.0 + v) / (1.0 - v)).round();
    let (red, nir) = (red as u8, nir as u8);
    let achieved: f64 = ndvi(nir, red).expect("channels are non-zero");
    if (achieved - v).abs() > 0.02 {
        return Err(Error::SceneSpec(format!(
            "NDVI {v} not representable in 8 bits (best error {:.4})",
            (achieved - v).abs()
        )));
    }
    Ok((red, nir))
}

/// 8-bit thermal count for a temperature, clamped to the range.
pub fn encode_temperature(t: f64, t_min: f64, t_max: f64) -> u8 {
    ((t - t_min) / (t_max - t_min) * 255.0)
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Truth for one generated tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeTruth {
    /// 1-based, in spec order.
    pub label: u32,
    /// Exact painted crown at thermal resolution.
    pub mask: BitMask,
    pub pixel_count: usize,
    pub target_ndvi: f64,
    /// NDVI actually encoded in the 8-bit channels.
    pub achieved_ndvi: f64,
    pub target_ctd_c: f64,
    /// CTD after 8-bit temperature quantization.
    pub achieved_ctd_c: f64,
}

/// A generated capture with its ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthScene {
    pub pair: CapturePair,
    pub truth: Vec<TreeTruth>,
}

/// Marsaglia-free Gaussian draw (Box-Muller); good enough for pixel noise.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn add_noise(value: u8, sigma: f64, rng: &mut ChaCha8Rng) -> u8 {
    if sigma == 0.0 {
        return value;
    }
    (f64::from(value) + sigma * gaussian(rng))
        .round()
        .clamp(0.0, 255.0) as u8
}

/// Renders a scene deterministically from its spec.
pub fn generate(spec: &SceneSpec) -> Result<SynthScene> {
    spec.validate()?;
    let (wt, ht) = (spec.thermal_width, spec.thermal_height);
    let (wr, hr) = (spec.rgn_width, spec.rgn_height);

    // Per-tree palette, fixed before painting.
    let mut palette = Vec::with_capacity(spec.trees.len());
    for t in &spec.trees {
        let (red, nir) = canopy_channels(t.target_ndvi)?;
        let count = encode_temperature(t.canopy_temperature_c, spec.t_min_c, spec.t_max_c);
        palette.push((red, nir, count));
    }

    // Thermal frame painted directly.
    let mut thermal = Plane::filled(wt, ht, 0u8);
    for y in 0..ht {
        for x in 0..wt {
            let count = match classify(&spec.trees, x as f64, y as f64) {
                Content::Sky => 0,
                Content::Canopy(i) => palette[i].2,
                Content::Trunk(_) => {
                    encode_temperature(spec.air_temperature_c, spec.t_min_c, spec.t_max_c)
                }
            };
            thermal.set(x, y, count);
        }
    }

    // RGN frame painted through the registration forward map.
    let mut red = Plane::filled(wr, hr, SKY_RED);
    let mut green = Plane::filled(wr, hr, SKY_GREEN);
    let mut nir = Plane::filled(wr, hr, SKY_NIR);
    for py in 0..hr {
        for px in 0..wr {
            let (tx, ty) =
                spec.registration
                    .rgn_to_thermal(px as f64, py as f64, (wr, hr), (wt, ht));
            let (r, g, n) = match classify(&spec.trees, tx, ty) {
                Content::Sky => (SKY_RED, SKY_GREEN, SKY_NIR),
                Content::Canopy(i) => (palette[i].0, CANOPY_GREEN, palette[i].1),
                Content::Trunk(_) => (TRUNK_RED, TRUNK_GREEN, TRUNK_NIR),
            };
            red.set(px, py, r);
            green.set(px, py, g);
            nir.set(px, py, n);
        }
    }

    // Seeded noise, applied channel by channel in a fixed order.
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        for plane in [&mut red, &mut green, &mut nir] {
            let (w, h) = (plane.width(), plane.height());
            for y in 0..h {
                for x in 0..w {
                    plane.set(x, y, add_noise(plane.at(x, y), spec.noise_sigma, &mut rng));
                }
            }
        }
        for y in 0..ht {
            for x in 0..wt {
                thermal.set(
                    x,
                    y,
                    add_noise(thermal.at(x, y), spec.noise_sigma, &mut rng),
                );
            }
        }
    }

    // Truth from the noiseless palette and exact masks.
    let footprint = spec.registration.footprint_mask((wt, ht));
    let mut truth = Vec::with_capacity(spec.trees.len());
    for (i, t) in spec.trees.iter().enumerate() {
        let mut mask = Plane::filled(wt, ht, false);
        for y in 0..ht {
            for x in 0..wt {
                if classify(&spec.trees, x as f64, y as f64) == Content::Canopy(i)
                    && footprint.at(x, y)
                {
                    mask.set(x, y, true);
                }
            }
        }
        let (r, n, count) = palette[i];
        let achieved_ndvi: f64 = ndvi(n, r).expect("canopy channels are non-zero");
        let achieved_temp = pixel_temperature(count, spec.t_min_c, spec.t_max_c);
        truth.push(TreeTruth {
            label: i as u32 + 1,
            pixel_count: mask.count(),
            mask,
            target_ndvi: t.target_ndvi,
            achieved_ndvi,
            target_ctd_c: t.canopy_temperature_c - spec.air_temperature_c,
            achieved_ctd_c: achieved_temp - spec.air_temperature_c,
        });
    }

    let meta = CaptureMeta {
        timestamp: 0.0,
        latitude: spec.latitude,
        longitude: spec.longitude,
        air_temperature_c: spec.air_temperature_c,
        t_min_c: spec.t_min_c,
        t_max_c: spec.t_max_c,
        band_order: BandOrder::RedGreenNir,
        device_id: "synth".into(),
        thermal_timestamp: None,
    };
    let rgn = RgnImage::new(red, green, nir)?;
    let thermal = ThermalImage::new(thermal, spec.t_min_c, spec.t_max_c)?;
    let pair = CapturePair::new(rgn, thermal, meta)?;
    Ok(SynthScene { pair, truth })
}
