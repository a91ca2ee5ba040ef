//! Spectral and thermal index math: NDVI, its range correction, pixel
//! temperatures, and the canopy-minus-air temperature difference (CTD).

use crate::error::{Error, Result};
use crate::raster::{BitMask, Plane, RgnImage, ThermalImage};
use crate::scalar::Real;

/// Decodes an 8-bit thermal count into degrees using the capture range:
/// count 0 is `t_min`, count 255 is `t_max`, linear in between.
pub fn pixel_temperature<F: Real>(count: u8, t_min: F, t_max: F) -> F {
    F::from_channel(count) / F::from_channel(255) * (t_max - t_min) + t_min
}

/// Decodes a whole thermal raster into degrees Celsius.
pub fn temperature_plane<F: Real>(img: &ThermalImage) -> Plane<F> {
    let t_min = F::from_f64_lossy(img.t_min);
    let t_max = F::from_f64_lossy(img.t_max);
    let data = img
        .values
        .data()
        .iter()
        .map(|&p| pixel_temperature(p, t_min, t_max))
        .collect();
    Plane::new(img.width(), img.height(), data).expect("dims preserved")
}

/// (NIR − Red) / (NIR + Red); `None` when both counts are zero.
pub fn ndvi<F: Real>(nir: u8, red: u8) -> Option<F> {
    let sum = u16::from(nir) + u16::from(red);
    if sum == 0 {
        return None;
    }
    let n = F::from_channel(nir);
    let r = F::from_channel(red);
    Some((n - r) / (n + r))
}

/// Raw NDVI for every pixel of a registered RGN image.
pub fn ndvi_plane<F: Real>(rgn: &RgnImage) -> Plane<Option<F>> {
    let data = rgn
        .nir
        .data()
        .iter()
        .zip(rgn.red.data())
        .map(|(&n, &r)| ndvi(n, r))
        .collect();
    Plane::new(rgn.width(), rgn.height(), data).expect("dims preserved")
}

/// Range-correction scale for a set of raw NDVI samples: |min| / |max|.
///
/// Fails with [`Error::EmptyMask`] on an empty set and
/// [`Error::DegenerateScale`] when the maximum is exactly zero.
pub fn ndvi_correction_scale<F: Real>(values: &[F]) -> Result<F> {
    let mut it = values.iter().copied();
    let first = it.next().ok_or(Error::EmptyMask)?;
    let (mut min, mut max) = (first, first);
    for v in it {
        if v < min {
            min = v;
        }
        if v > max {
            max = v;
        }
    }
    if max == F::zero() {
        return Err(Error::DegenerateScale);
    }
    Ok(min.abs() / max.abs())
}

/// Applies the range correction to each sample: v · |min| / |max|.
pub fn corrected_ndvi<F: Real>(values: &[F]) -> Result<Vec<F>> {
    let scale = ndvi_correction_scale(values)?;
    Ok(values.iter().map(|&v| v * scale).collect())
}

/// Canopy-minus-air temperature difference in the same unit as the inputs.
pub fn ctd<F: Real>(mean_canopy_temperature: F, air_temperature: F) -> F {
    mean_canopy_temperature - air_temperature
}

/// Per-tree index summary over one instance mask.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeIndexes<F> {
    pub label: u32,
    /// Mask pixels with a defined NDVI value.
    pub pixel_count: usize,
    pub ndvi_raw_mean: F,
    /// Raw mean scaled by the instance's own |min|/|max| range correction.
    pub ndvi_corrected_mean: F,
    /// Mean canopy temperature minus air temperature, °C.
    pub ctd_c: F,
}

/// Measures one instance: mean raw NDVI, corrected NDVI, and CTD over the
/// mask. Pixels with undefined NDVI are skipped for NDVI but still count
/// toward the temperature mean (the thermal raster defines every pixel).
pub fn measure_instance<F: Real>(
    ndvi: &Plane<Option<F>>,
    temperatures: &Plane<F>,
    mask: &BitMask,
    air_temperature: F,
    label: u32,
) -> Result<TreeIndexes<F>> {
    if !ndvi.same_dims(mask) || !temperatures.same_dims(mask) {
        return Err(Error::Validation(
            "instance mask dimensions differ from index planes".into(),
        ));
    }
    let mut raw = Vec::new();
    let mut temp_sum = F::zero();
    let mut temp_n = 0usize;
    for (x, y) in mask.true_pixels() {
        if let Some(v) = ndvi.at(x, y) {
            raw.push(v);
        }
        temp_sum = temp_sum + temperatures.at(x, y);
        temp_n += 1;
    }
    if raw.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = F::from_count(raw.len());
    let raw_mean = raw.iter().copied().sum::<F>() / n;
    let scale = ndvi_correction_scale(&raw)?;
    let canopy_temp = temp_sum / F::from_count(temp_n);
    Ok(TreeIndexes {
        label,
        pixel_count: raw.len(),
        ndvi_raw_mean: raw_mean,
        ndvi_corrected_mean: raw_mean * scale,
        ctd_c: ctd(canopy_temp, air_temperature),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn temperature_endpoints_and_midpoint() {
        assert_eq!(pixel_temperature::<f64>(0, -10.0, 40.0), -10.0);
        assert_eq!(pixel_temperature::<f64>(255, -10.0, 40.0), 40.0);
        assert_abs_diff_eq!(
            pixel_temperature::<f64>(128, -10.0, 40.0),
            15.098039215686274,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ndvi_basic_values() {
        assert_eq!(ndvi::<f64>(0, 0), None);
        assert_eq!(ndvi::<f64>(100, 100), Some(0.0));
        assert_eq!(ndvi::<f64>(255, 85), Some(0.5));
        assert_eq!(ndvi::<f64>(85, 255), Some(-0.5));
        assert_eq!(ndvi::<f64>(1, 0), Some(1.0));
        assert_eq!(ndvi::<f64>(0, 1), Some(-1.0));
    }

    #[test]
    fn correction_scale_example() {
        let raw = [0.8f64, -0.2, 0.4];
        let scale = ndvi_correction_scale(&raw).unwrap();
        assert_abs_diff_eq!(scale, 0.25, epsilon = 1e-15);
        let corrected = corrected_ndvi(&raw).unwrap();
        assert_abs_diff_eq!(corrected[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(corrected[1], -0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(corrected[2], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn correction_scale_degenerate_and_empty() {
        assert!(matches!(
            ndvi_correction_scale::<f64>(&[0.0, -0.5]),
            Err(Error::DegenerateScale)
        ));
        assert!(matches!(
            ndvi_correction_scale::<f64>(&[0.0]),
            Err(Error::DegenerateScale)
        ));
        assert!(matches!(
            ndvi_correction_scale::<f64>(&[]),
            Err(Error::EmptyMask)
        ));
        // A strictly negative maximum is not degenerate.
        let s = ndvi_correction_scale(&[-0.4f64, -0.2]).unwrap();
        assert_abs_diff_eq!(s, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn uniform_values_keep_scale_one() {
        let raw = [0.37f64; 20];
        assert_abs_diff_eq!(ndvi_correction_scale(&raw).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn measure_instance_small_case() {
        let ndvi = Plane::new(2, 2, vec![Some(0.5f64), Some(0.3), None, Some(0.1)]).unwrap();
        let temps = Plane::new(2, 2, vec![20.0f64, 22.0, 30.0, 24.0]).unwrap();
        let mask = Plane::new(2, 2, vec![true, true, false, true]).unwrap();
        let t = measure_instance(&ndvi, &temps, &mask, 2.5, 7).unwrap();
        assert_eq!(t.label, 7);
        assert_eq!(t.pixel_count, 3);
        assert_abs_diff_eq!(t.ndvi_raw_mean, 0.3, epsilon = 1e-12);
        // Scale = |0.1| / |0.5| = 0.2.
        assert_abs_diff_eq!(t.ndvi_corrected_mean, 0.06, epsilon = 1e-12);
        assert_abs_diff_eq!(t.ctd_c, 22.0 - 2.5, epsilon = 1e-12);
    }

    #[test]
    fn measure_instance_empty_mask_errors() {
        let ndvi = Plane::new(2, 2, vec![Some(0.5f64); 4]).unwrap();
        let temps = Plane::filled(2, 2, 20.0f64);
        let mask = Plane::filled(2, 2, false);
        assert!(matches!(
            measure_instance(&ndvi, &temps, &mask, 0.0, 1),
            Err(Error::EmptyMask)
        ));
    }

    #[test]
    fn works_in_single_precision() {
        assert_eq!(pixel_temperature::<f32>(0, -10.0, 40.0), -10.0);
        let s = ndvi_correction_scale(&[0.8f32, -0.2, 0.4]).unwrap();
        assert_abs_diff_eq!(s, 0.25f32, epsilon = 1e-6);
    }
}
