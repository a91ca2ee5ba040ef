//! File I/O: rasters (PNG/TIFF), metadata sidecars, and label masks.
//!
//! RGN rasters are 8-bit three-channel files whose band order is declared in
//! the metadata sidecar. Thermal rasters are 8-bit single-channel. Instance
//! label masks are 16-bit single-channel PNG (0 = background, k = instance k)
//! with an optional `{label: score}` JSON sidecar next to them.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use image::{DynamicImage, ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};
use crate::raster::{BandOrder, CaptureMeta, CapturePair, Plane, RgnImage, ThermalImage};
use crate::segment::{Instance, InstanceMaskSet};

fn decode(path: &Path) -> Result<DynamicImage> {
    image::ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Loads an 8-bit 3-channel raster and maps file channels to (red, green, nir).
pub fn load_rgn(path: &Path, order: BandOrder) -> Result<RgnImage> {
    let img = decode(path)?;
    let rgb = match img {
        DynamicImage::ImageRgb8(buf) => buf,
        other => {
            return Err(Error::Format(format!(
                "{}: expected 8-bit 3-channel raster, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let mut red = Vec::with_capacity(w * h);
    let mut green = Vec::with_capacity(w * h);
    let mut nir = Vec::with_capacity(w * h);
    for px in rgb.pixels() {
        let (r, g, n) = order.to_rgn(px.0);
        red.push(r);
        green.push(g);
        nir.push(n);
    }
    RgnImage::new(
        Plane::new(w, h, red)?,
        Plane::new(w, h, green)?,
        Plane::new(w, h, nir)?,
    )
}

/// Writes an RGN image with file channels in the declared order.
pub fn save_rgn(path: &Path, img: &RgnImage, order: BandOrder) -> Result<()> {
    let (w, h) = (img.width(), img.height());
    let mut buf = ImageBuffer::<Rgb<u8>, Vec<u8>>::new(w as u32, h as u32);
    for (x, y, px) in buf.enumerate_pixels_mut() {
        let (xu, yu) = (x as usize, y as usize);
        let r = img.red.at(xu, yu);
        let g = img.green.at(xu, yu);
        let n = img.nir.at(xu, yu);
        // to_rgn is a permutation; invert it by writing through the same map.
        px.0 = match order {
            BandOrder::RedGreenNir => [r, g, n],
            BandOrder::NirGreenRed => [n, g, r],
            BandOrder::GreenRedNir => [g, r, n],
        };
    }
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

/// Loads an 8-bit single-channel thermal raster; the range comes from `meta`.
pub fn load_thermal(path: &Path, t_min: f64, t_max: f64) -> Result<ThermalImage> {
    let img = decode(path)?;
    let gray = match img {
        DynamicImage::ImageLuma8(buf) => buf,
        other => {
            return Err(Error::Format(format!(
                "{}: expected 8-bit 1-channel raster, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (gray.width() as usize, gray.height() as usize);
    let values = Plane::new(w, h, gray.into_raw())?;
    ThermalImage::new(values, t_min, t_max)
}

pub fn save_thermal(path: &Path, img: &ThermalImage) -> Result<()> {
    let buf = ImageBuffer::<Luma<u8>, Vec<u8>>::from_raw(
        img.width() as u32,
        img.height() as u32,
        img.values.data().to_vec(),
    )
    .expect("plane length matches dimensions");
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn load_meta(path: &Path) -> Result<CaptureMeta> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let meta: CaptureMeta = serde_json::from_str(&text)
        .map_err(|e| Error::Metadata(format!("{}: {e}", path.display())))?;
    meta.validate()?;
    Ok(meta)
}

pub fn save_meta(path: &Path, meta: &CaptureMeta) -> Result<()> {
    let text = serde_json::to_string_pretty(meta).expect("meta serializes");
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a validated capture triplet.
pub fn load_capture(rgn_path: &Path, thermal_path: &Path, meta_path: &Path) -> Result<CapturePair> {
    let meta = load_meta(meta_path)?;
    let rgn = load_rgn(rgn_path, meta.band_order)?;
    let thermal = load_thermal(thermal_path, meta.t_min_c, meta.t_max_c)?;
    CapturePair::new(rgn, thermal, meta)
}

/// Writes a capture triplet; paths should share a stem.
pub fn save_capture(
    rgn_path: &Path,
    thermal_path: &Path,
    meta_path: &Path,
    pair: &CapturePair,
) -> Result<()> {
    save_rgn(rgn_path, &pair.rgn, pair.meta.band_order)?;
    save_thermal(thermal_path, &pair.thermal)?;
    save_meta(meta_path, &pair.meta)
}

/// Conventional path of the per-instance score sidecar for a label raster.
pub fn scores_sidecar_path(label_path: &Path) -> std::path::PathBuf {
    let stem = label_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    label_path.with_file_name(format!("{stem}.scores.json"))
}

/// Loads a 16-bit label raster as an instance mask set.
///
/// Labels need not be contiguous; they are preserved as instance ids. Scores
/// default to 1.0 unless the sidecar provides them.
pub fn load_label_masks(
    path: &Path,
    expected_dims: Option<(usize, usize)>,
) -> Result<InstanceMaskSet> {
    let img = decode(path)?;
    let labels: ImageBuffer<Luma<u16>, Vec<u16>> = match img {
        DynamicImage::ImageLuma16(buf) => buf,
        // 8-bit label rasters are promoted so small hand-made fixtures work.
        DynamicImage::ImageLuma8(buf) => {
            let (w, h) = (buf.width(), buf.height());
            ImageBuffer::from_raw(w, h, buf.into_raw().into_iter().map(u16::from).collect())
                .expect("length preserved")
        }
        other => {
            return Err(Error::Format(format!(
                "{}: expected single-channel label raster, got {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    let (w, h) = (labels.width() as usize, labels.height() as usize);
    if let Some((ew, eh)) = expected_dims {
        if (w, h) != (ew, eh) {
            return Err(Error::Validation(format!(
                "{}: label raster is {w}x{h}, expected {ew}x{eh}",
                path.display()
            )));
        }
    }

    let scores = load_scores_sidecar(&scores_sidecar_path(path))?;

    let mut ids: Vec<u16> = labels
        .pixels()
        .map(|p| p.0[0])
        .filter(|&v| v != 0)
        .collect();
    ids.sort_unstable();
    ids.dedup();

    let mut instances = Vec::with_capacity(ids.len());
    for id in ids {
        let mask = Plane::new(w, h, labels.pixels().map(|p| p.0[0] == id).collect())?;
        let score = scores.get(&u32::from(id)).copied().unwrap_or(1.0);
        instances.push(Instance {
            label: u32::from(id),
            mask,
            score,
        });
    }
    InstanceMaskSet::new(w, h, instances)
}

fn load_scores_sidecar(path: &Path) -> Result<BTreeMap<u32, f64>> {
    if !path.exists() {
        return Ok(BTreeMap::new());
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: BTreeMap<String, f64> = serde_json::from_str(&text)
        .map_err(|e| Error::Metadata(format!("{}: {e}", path.display())))?;
    let mut map = BTreeMap::new();
    for (k, v) in raw {
        let label: u32 = k.parse().map_err(|_| {
            Error::Metadata(format!("{}: non-numeric label key {k:?}", path.display()))
        })?;
        map.insert(label, v);
    }
    Ok(map)
}

/// Writes an instance mask set as a 16-bit label raster plus score sidecar.
///
/// Overlapping instances are written in ascending label order, so the highest
/// label wins a contested pixel.
pub fn save_label_masks(path: &Path, set: &InstanceMaskSet) -> Result<()> {
    let (w, h) = (set.width, set.height);
    let mut data = vec![0u16; w * h];
    for inst in &set.instances {
        if inst.label > u32::from(u16::MAX) {
            return Err(Error::Validation(format!(
                "label {} does not fit a 16-bit raster",
                inst.label
            )));
        }
        for (x, y) in inst.mask.true_pixels() {
            data[y * w + x] = inst.label as u16;
        }
    }
    let buf = ImageBuffer::<Luma<u16>, Vec<u16>>::from_raw(w as u32, h as u32, data)
        .expect("length matches dimensions");
    buf.save(path)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;

    let scores: BTreeMap<String, f64> = set
        .instances
        .iter()
        .map(|i| (i.label.to_string(), i.score))
        .collect();
    let sidecar = scores_sidecar_path(path);
    fs::write(
        &sidecar,
        serde_json::to_string_pretty(&scores).expect("scores serialize"),
    )
    .map_err(|e| Error::io(sidecar, e))
}
