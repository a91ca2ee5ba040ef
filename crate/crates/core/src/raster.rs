//! Core raster types shared by every pipeline stage.
//!
//! Rasters use a top-left origin with `x` rightward and `y` downward, stored
//! row-major. Images are immutable after construction and safe to share
//! read-only across parallel workers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A single row-major plane of pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Copy> Plane<T> {
    pub fn new(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Validation(format!(
                "plane data length {} does not match {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn in_bounds(&self, x: usize, y: usize) -> bool {
        x < self.width && y < self.height
    }

    /// Checked pixel access.
    pub fn get(&self, x: usize, y: usize) -> Result<T> {
        if !self.in_bounds(x, y) {
            return Err(Error::Bounds {
                x,
                y,
                width: self.width,
                height: self.height,
            });
        }
        Ok(self.data[y * self.width + x])
    }

    /// Unchecked pixel access; caller guarantees bounds.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> T {
        debug_assert!(self.in_bounds(x, y));
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: T) {
        debug_assert!(self.in_bounds(x, y));
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    /// Row-major iteration over `(x, y, value)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .map(move |(i, &v)| (i % w, i / w, v))
    }

    pub fn same_dims<U: Copy>(&self, other: &Plane<U>) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Boolean plane used for masks and footprints.
pub type BitMask = Plane<bool>;

impl BitMask {
    /// Number of true pixels.
    pub fn count(&self) -> usize {
        self.data().iter().filter(|&&b| b).count()
    }

    /// Row-major coordinates of true pixels.
    pub fn true_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.iter().filter(|&(_, _, v)| v).map(|(x, y, _)| (x, y))
    }
}

/// Three-channel (red, green, near-infrared) 8-bit raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgnImage {
    pub red: Plane<u8>,
    pub green: Plane<u8>,
    pub nir: Plane<u8>,
}

impl RgnImage {
    pub fn new(red: Plane<u8>, green: Plane<u8>, nir: Plane<u8>) -> Result<Self> {
        if !red.same_dims(&green) || !red.same_dims(&nir) {
            return Err(Error::Validation(
                "RGN channel planes have mismatched dimensions".into(),
            ));
        }
        Ok(RgnImage { red, green, nir })
    }

    pub fn width(&self) -> usize {
        self.red.width()
    }

    pub fn height(&self) -> usize {
        self.red.height()
    }

    /// Channel values `(red, green, nir)` at `(x, y)`.
    pub fn pixel_at(&self, x: usize, y: usize) -> Result<(u8, u8, u8)> {
        Ok((self.red.get(x, y)?, self.green.at(x, y), self.nir.at(x, y)))
    }
}

/// Single-channel normalized thermal raster plus the temperature range that
/// decodes it.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalImage {
    pub values: Plane<u8>,
    /// Lower end of the configured range, degrees Celsius.
    pub t_min: f64,
    /// Upper end of the configured range, degrees Celsius.
    pub t_max: f64,
}

impl ThermalImage {
    pub fn new(values: Plane<u8>, t_min: f64, t_max: f64) -> Result<Self> {
        // partial_cmp also rejects NaN endpoints, which `<` alone would let
        // through in the flipped form.
        if t_min.partial_cmp(&t_max) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Validation(format!(
                "thermal range requires t_min < t_max, got ({t_min}, {t_max})"
            )));
        }
        Ok(ThermalImage {
            values,
            t_min,
            t_max,
        })
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    /// Normalized pixel value at `(x, y)`.
    pub fn pixel_at(&self, x: usize, y: usize) -> Result<u8> {
        self.values.get(x, y)
    }
}

/// Declared channel order of an RGN file on disk.
///
/// Sensors differ in how they pack the three bands, so the sidecar declares
/// the order instead of the loader assuming one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BandOrder {
    /// File channels are (red, green, nir). The default.
    #[default]
    RedGreenNir,
    /// File channels are (nir, green, red).
    NirGreenRed,
    /// File channels are (green, red, nir).
    GreenRedNir,
}

impl BandOrder {
    /// Maps a file-order channel triple to `(red, green, nir)`.
    pub fn to_rgn(self, c: [u8; 3]) -> (u8, u8, u8) {
        match self {
            BandOrder::RedGreenNir => (c[0], c[1], c[2]),
            BandOrder::NirGreenRed => (c[2], c[1], c[0]),
            BandOrder::GreenRedNir => (c[1], c[0], c[2]),
        }
    }
}

/// Capture metadata from the GNSS receiver and ambient sensors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureMeta {
    /// UTC seconds of the multispectral exposure.
    pub timestamp: f64,
    /// Decimal degrees, positive north.
    pub latitude: f64,
    /// Decimal degrees, positive east.
    pub longitude: f64,
    /// Ambient air temperature in degrees Celsius.
    pub air_temperature_c: f64,
    /// Thermal sensor range, degrees Celsius.
    pub t_min_c: f64,
    pub t_max_c: f64,
    #[serde(default)]
    pub band_order: BandOrder,
    #[serde(default)]
    pub device_id: String,
    /// UTC seconds of the thermal exposure when it differs from `timestamp`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thermal_timestamp: Option<f64>,
}

impl CaptureMeta {
    pub fn validate(&self) -> Result<()> {
        if !(-90.0..=90.0).contains(&self.latitude) {
            return Err(Error::Validation(format!(
                "latitude {} outside [-90, 90]",
                self.latitude
            )));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return Err(Error::Validation(format!(
                "longitude {} outside [-180, 180]",
                self.longitude
            )));
        }
        if self.t_min_c.partial_cmp(&self.t_max_c) != Some(std::cmp::Ordering::Less) {
            return Err(Error::Validation(format!(
                "thermal range ({}, {}) requires t_min < t_max",
                self.t_min_c, self.t_max_c
            )));
        }
        Ok(())
    }
}

/// Seconds the two sensor timestamps may differ within one capture event.
pub const DEFAULT_TIMESTAMP_SKEW_S: f64 = 2.0;

/// One triggered capture: RGN + thermal + metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct CapturePair {
    pub rgn: RgnImage,
    pub thermal: ThermalImage,
    pub meta: CaptureMeta,
}

impl CapturePair {
    /// Builds a pair with the default timestamp-skew tolerance.
    pub fn new(rgn: RgnImage, thermal: ThermalImage, meta: CaptureMeta) -> Result<Self> {
        Self::with_skew(rgn, thermal, meta, DEFAULT_TIMESTAMP_SKEW_S)
    }

    pub fn with_skew(
        rgn: RgnImage,
        thermal: ThermalImage,
        meta: CaptureMeta,
        max_skew_s: f64,
    ) -> Result<Self> {
        meta.validate()?;
        if let Some(ts) = meta.thermal_timestamp {
            let skew = (ts - meta.timestamp).abs();
            if skew > max_skew_s {
                return Err(Error::Validation(format!(
                    "sensor timestamps differ by {skew:.3} s, more than the {max_skew_s} s tolerance"
                )));
            }
        }
        Ok(CapturePair { rgn, thermal, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> CaptureMeta {
        CaptureMeta {
            timestamp: 1_700_000_000.0,
            latitude: 42.37,
            longitude: -71.11,
            air_temperature_c: 3.0,
            t_min_c: -10.0,
            t_max_c: 40.0,
            band_order: BandOrder::default(),
            device_id: "unit".into(),
            thermal_timestamp: None,
        }
    }

    fn uniform_rgn(w: usize, h: usize, v: u8) -> RgnImage {
        RgnImage::new(
            Plane::filled(w, h, v),
            Plane::filled(w, h, v),
            Plane::filled(w, h, v),
        )
        .unwrap()
    }

    #[test]
    fn pixel_at_corner_and_bounds() {
        let img = uniform_rgn(4, 3, 7);
        assert_eq!(img.pixel_at(0, 0).unwrap(), (7, 7, 7));
        assert_eq!(img.pixel_at(3, 2).unwrap(), (7, 7, 7));
        assert!(matches!(
            img.pixel_at(4, 0),
            Err(Error::Bounds { x: 4, y: 0, .. })
        ));
    }

    #[test]
    fn uniform_plane_reads_constant() {
        let img = uniform_rgn(5, 5, 7);
        for y in 0..5 {
            for x in 0..5 {
                assert_eq!(img.pixel_at(x, y).unwrap(), (7, 7, 7));
            }
        }
    }

    #[test]
    fn plane_iter_visits_every_pixel_once() {
        let p: Plane<u8> = Plane::new(6, 4, (0..24).collect()).unwrap();
        let mut seen = [false; 24];
        let mut visits = 0;
        for (x, y, v) in p.iter() {
            assert_eq!(v as usize, y * 6 + x);
            seen[y * 6 + x] = true;
            visits += 1;
        }
        assert_eq!(visits, 6 * 4);
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn mismatched_channel_dims_rejected() {
        let err = RgnImage::new(
            Plane::filled(4, 4, 0),
            Plane::filled(4, 4, 0),
            Plane::filled(4, 3, 0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn thermal_range_must_be_increasing() {
        let plane = Plane::filled(2, 2, 0u8);
        assert!(ThermalImage::new(plane.clone(), 40.0, -10.0).is_err());
        assert!(ThermalImage::new(plane, -10.0, 40.0).is_ok());
    }

    #[test]
    fn timestamp_skew_enforced() {
        let mut m = meta();
        m.thermal_timestamp = Some(m.timestamp + 5.0);
        let rgn = uniform_rgn(2, 2, 1);
        let thermal = ThermalImage::new(Plane::filled(2, 2, 0), -10.0, 40.0).unwrap();
        assert!(CapturePair::new(rgn.clone(), thermal.clone(), m.clone()).is_err());
        m.thermal_timestamp = Some(m.timestamp + 1.5);
        assert!(CapturePair::new(rgn, thermal, m).is_ok());
    }

    #[test]
    fn meta_coordinate_domains() {
        let mut m = meta();
        m.latitude = 91.0;
        assert!(m.validate().is_err());
        let mut m = meta();
        m.longitude = -181.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn band_order_maps_channels() {
        assert_eq!(BandOrder::RedGreenNir.to_rgn([1, 2, 3]), (1, 2, 3));
        assert_eq!(BandOrder::NirGreenRed.to_rgn([1, 2, 3]), (3, 2, 1));
        assert_eq!(BandOrder::GreenRedNir.to_rgn([1, 2, 3]), (2, 1, 3));
    }
}
