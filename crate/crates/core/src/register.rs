//! Registration of the high-resolution RGN raster onto the thermal grid.
//!
//! The RGN image is scaled about its center, resampled to the thermal
//! resolution, then shifted by a pixel translation expressed in thermal
//! pixels (+x right, +y up). Implemented as a single inverse-map warp so each
//! output pixel is sampled exactly once.
//!
//! Coordinates are pixel centers: integer (x, y) is the center of that pixel.
//! Output pixels whose pre-translation position falls outside the thermal
//! grid are outside the usable footprint; downstream code must mask them out.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{BitMask, CaptureMeta, CapturePair, Plane, RgnImage, ThermalImage};

/// Alignment parameters: pixel shift in thermal pixels plus a center zoom.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegistrationParams {
    /// Shift of the scaled RGN content to the right, in thermal pixels.
    pub translate_x: f64,
    /// Shift of the scaled RGN content upward, in thermal pixels.
    pub translate_y: f64,
    /// Center crop factor in (0, 1]; 1.0 keeps the full RGN field of view.
    pub zoom: f64,
}

impl RegistrationParams {
    pub fn new(translate_x: f64, translate_y: f64, zoom: f64) -> Result<Self> {
        if !translate_x.is_finite() || !translate_y.is_finite() {
            return Err(Error::Validation(format!(
                "translation ({translate_x}, {translate_y}) must be finite"
            )));
        }
        if !zoom.is_finite() || zoom <= 0.0 || zoom > 1.0 {
            return Err(Error::Validation(format!("zoom {zoom} must lie in (0, 1]")));
        }
        Ok(Self {
            translate_x,
            translate_y,
            zoom,
        })
    }

    pub fn identity() -> Self {
        Self {
            translate_x: 0.0,
            translate_y: 0.0,
            zoom: 1.0,
        }
    }

    /// Maps a thermal-grid coordinate to the RGN source coordinate.
    pub fn thermal_to_rgn(
        &self,
        x: f64,
        y: f64,
        rgn_dims: (usize, usize),
        thermal_dims: (usize, usize),
    ) -> (f64, f64) {
        let (wr, hr) = (rgn_dims.0 as f64, rgn_dims.1 as f64);
        let (wt, ht) = (thermal_dims.0 as f64, thermal_dims.1 as f64);
        let u = x - self.translate_x;
        let v = y + self.translate_y;
        let sx = (u + 0.5) * (self.zoom * wr / wt) - 0.5 + (1.0 - self.zoom) * wr / 2.0;
        let sy = (v + 0.5) * (self.zoom * hr / ht) - 0.5 + (1.0 - self.zoom) * hr / 2.0;
        (sx, sy)
    }

    /// Maps an RGN coordinate to the thermal-grid coordinate (inverse of
    /// [`thermal_to_rgn`](Self::thermal_to_rgn)).
    pub fn rgn_to_thermal(
        &self,
        sx: f64,
        sy: f64,
        rgn_dims: (usize, usize),
        thermal_dims: (usize, usize),
    ) -> (f64, f64) {
        let (wr, hr) = (rgn_dims.0 as f64, rgn_dims.1 as f64);
        let (wt, ht) = (thermal_dims.0 as f64, thermal_dims.1 as f64);
        let u = (sx + 0.5 - (1.0 - self.zoom) * wr / 2.0) / (self.zoom * wr / wt) - 0.5;
        let v = (sy + 0.5 - (1.0 - self.zoom) * hr / 2.0) / (self.zoom * hr / ht) - 0.5;
        (u + self.translate_x, v - self.translate_y)
    }

    /// Whether an output pixel lies inside the usable footprint: its
    /// pre-translation position must fall within the thermal grid.
    pub fn in_footprint(&self, x: usize, y: usize, thermal_dims: (usize, usize)) -> bool {
        let u = x as f64 - self.translate_x;
        let v = y as f64 + self.translate_y;
        u >= 0.0 && u <= (thermal_dims.0 - 1) as f64 && v >= 0.0 && v <= (thermal_dims.1 - 1) as f64
    }

    pub fn footprint_mask(&self, thermal_dims: (usize, usize)) -> BitMask {
        let (w, h) = thermal_dims;
        let mut mask = Plane::filled(w, h, false);
        for y in 0..h {
            for x in 0..w {
                if self.in_footprint(x, y, thermal_dims) {
                    mask.set(x, y, true);
                }
            }
        }
        mask
    }
}

/// How the warp samples between RGN pixel centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resampling {
    #[default]
    Bilinear,
    Nearest,
}

impl std::str::FromStr for Resampling {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bilinear" => Ok(Resampling::Bilinear),
            "nearest" => Ok(Resampling::Nearest),
            other => Err(format!(
                "unknown resampling {other:?} (expected bilinear/nearest)"
            )),
        }
    }
}

fn sample_bilinear(plane: &Plane<u8>, sx: f64, sy: f64) -> f64 {
    let (w, h) = (plane.width() as isize, plane.height() as isize);
    let clamp = |v: isize, hi: isize| v.clamp(0, hi) as usize;
    let x0f = sx.floor();
    let y0f = sy.floor();
    let fx = sx - x0f;
    let fy = sy - y0f;
    let (x0, y0) = (x0f as isize, y0f as isize);
    let (x0c, x1c) = (clamp(x0, w - 1), clamp(x0 + 1, w - 1));
    let (y0c, y1c) = (clamp(y0, h - 1), clamp(y0 + 1, h - 1));
    let v00 = f64::from(plane.at(x0c, y0c));
    let v10 = f64::from(plane.at(x1c, y0c));
    let v01 = f64::from(plane.at(x0c, y1c));
    let v11 = f64::from(plane.at(x1c, y1c));
    v00 * (1.0 - fx) * (1.0 - fy) + v10 * fx * (1.0 - fy) + v01 * (1.0 - fx) * fy + v11 * fx * fy
}

fn sample_nearest(plane: &Plane<u8>, sx: f64, sy: f64) -> f64 {
    let x = (sx.round() as isize).clamp(0, plane.width() as isize - 1) as usize;
    let y = (sy.round() as isize).clamp(0, plane.height() as isize - 1) as usize;
    f64::from(plane.at(x, y))
}

fn warp_band(
    band: &Plane<u8>,
    params: &RegistrationParams,
    thermal_dims: (usize, usize),
    resampling: Resampling,
) -> Plane<u8> {
    let (wt, ht) = thermal_dims;
    let rgn_dims = (band.width(), band.height());
    let mut out = Plane::filled(wt, ht, 0u8);
    for y in 0..ht {
        for x in 0..wt {
            if !params.in_footprint(x, y, thermal_dims) {
                continue;
            }
            let (sx, sy) = params.thermal_to_rgn(x as f64, y as f64, rgn_dims, thermal_dims);
            let v = match resampling {
                Resampling::Bilinear => sample_bilinear(band, sx, sy),
                Resampling::Nearest => sample_nearest(band, sx, sy),
            };
            out.set(x, y, v.round().clamp(0.0, 255.0) as u8);
        }
    }
    out
}

/// A capture with the RGN bands resampled onto the thermal grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisteredCapture {
    /// RGN bands at thermal resolution; pixels outside the footprint are 0.
    pub rgn: RgnImage,
    pub thermal: ThermalImage,
    /// Output pixels with valid RGN content.
    pub footprint: BitMask,
    pub meta: CaptureMeta,
    pub params: RegistrationParams,
}

/// Warps the RGN bands of `pair` onto its thermal grid.
pub fn register(
    pair: &CapturePair,
    params: RegistrationParams,
    resampling: Resampling,
) -> Result<RegisteredCapture> {
    // Reject parameter combinations new() would refuse, in case the struct
    // was built directly from deserialized config.
    let params = RegistrationParams::new(params.translate_x, params.translate_y, params.zoom)?;
    let thermal_dims = (pair.thermal.width(), pair.thermal.height());
    let red = warp_band(&pair.rgn.red, &params, thermal_dims, resampling);
    let green = warp_band(&pair.rgn.green, &params, thermal_dims, resampling);
    let nir = warp_band(&pair.rgn.nir, &params, thermal_dims, resampling);
    Ok(RegisteredCapture {
        rgn: RgnImage::new(red, green, nir)?,
        thermal: pair.thermal.clone(),
        footprint: params.footprint_mask(thermal_dims),
        meta: pair.meta.clone(),
        params,
    })
}
