//! Canopy segmentation: threshold raw NDVI, group leaf pixels into tree
//! instances with 8-connected component labeling, and despeckle masks with a
//! boolean median filter.

use crate::error::{Error, Result};
use crate::raster::{BitMask, Plane};
use crate::scalar::Real;

/// One segmented tree crown.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub label: u32,
    pub mask: BitMask,
    /// Detector confidence in [0, 1]; 1.0 for threshold segmentation.
    pub score: f64,
}

/// All instances of one capture, sharing a raster geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMaskSet {
    pub width: usize,
    pub height: usize,
    pub instances: Vec<Instance>,
}

impl InstanceMaskSet {
    pub fn new(width: usize, height: usize, instances: Vec<Instance>) -> Result<Self> {
        for inst in &instances {
            if inst.mask.width() != width || inst.mask.height() != height {
                return Err(Error::Validation(format!(
                    "instance {} mask is {}x{}, set is {width}x{height}",
                    inst.label,
                    inst.mask.width(),
                    inst.mask.height()
                )));
            }
        }
        Ok(Self {
            width,
            height,
            instances,
        })
    }
}

/// Tuning knobs for [`segment_canopy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentationParams<F> {
    /// Minimum raw NDVI for a pixel to count as leaf canopy.
    pub ndvi_cutoff: F,
    /// Components smaller than this (after despeckling) are dropped.
    pub min_instance_area: usize,
    /// Odd side length of the boolean median filter window.
    pub median_kernel: usize,
}

impl<F: Real> Default for SegmentationParams<F> {
    fn default() -> Self {
        Self {
            ndvi_cutoff: F::from_f64_lossy(0.02),
            min_instance_area: 50,
            median_kernel: 3,
        }
    }
}

/// Pixels that are inside the footprint, have a defined NDVI, and meet the
/// cutoff (inclusive).
pub fn keep_mask<F: Real>(
    ndvi: &Plane<Option<F>>,
    footprint: &BitMask,
    cutoff: F,
) -> Result<BitMask> {
    if !ndvi.same_dims(footprint) {
        return Err(Error::Validation(
            "footprint dimensions differ from NDVI plane".into(),
        ));
    }
    let data = ndvi
        .data()
        .iter()
        .zip(footprint.data())
        .map(|(v, &inside)| inside && matches!(v, Some(x) if *x >= cutoff))
        .collect();
    Plane::new(ndvi.width(), ndvi.height(), data)
}

/// 8-connected components of a boolean mask, ordered by their first pixel in
/// raster order. Uses union-find with path halving.
pub fn connected_components(mask: &BitMask) -> Vec<BitMask> {
    let (w, h) = (mask.width(), mask.height());
    let mut parent: Vec<u32> = (0..(w * h) as u32).collect();

    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }
    fn union(parent: &mut [u32], a: u32, b: u32) {
        let (ra, rb) = (find(parent, a), find(parent, b));
        if ra != rb {
            // Smaller root wins so roots stay raster-ordered.
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            parent[hi as usize] = lo;
        }
    }

    for y in 0..h {
        for x in 0..w {
            if !mask.at(x, y) {
                continue;
            }
            let i = (y * w + x) as u32;
            // Union with already-visited neighbors: W, NW, N, NE.
            if x > 0 && mask.at(x - 1, y) {
                union(&mut parent, i, i - 1);
            }
            if y > 0 {
                let up = i - w as u32;
                if x > 0 && mask.at(x - 1, y - 1) {
                    union(&mut parent, i, up - 1);
                }
                if mask.at(x, y - 1) {
                    union(&mut parent, i, up);
                }
                if x + 1 < w && mask.at(x + 1, y - 1) {
                    union(&mut parent, i, up + 1);
                }
            }
        }
    }

    let mut order: Vec<u32> = Vec::new();
    let mut slot: std::collections::HashMap<u32, usize> = std::collections::HashMap::new();
    let mut comps: Vec<BitMask> = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !mask.at(x, y) {
                continue;
            }
            let root = find(&mut parent, (y * w + x) as u32);
            let idx = *slot.entry(root).or_insert_with(|| {
                order.push(root);
                comps.push(Plane::filled(w, h, false));
                comps.len() - 1
            });
            comps[idx].set(x, y, true);
        }
    }
    comps
}

/// Boolean median filter: each output pixel is the majority vote of the k×k
/// window around it, with out-of-bounds positions counted as false (zero
/// padding). `k` must be odd, so k² is odd and no vote can tie.
pub fn median_filter_mask(mask: &BitMask, k: usize) -> Result<BitMask> {
    if k == 0 || k.is_multiple_of(2) {
        return Err(Error::Validation(format!(
            "median filter kernel {k} must be a positive odd number"
        )));
    }
    let (w, h) = (mask.width(), mask.height());
    let r = (k / 2) as isize;
    let majority = (k * k / 2 + 1) as u32;
    let mut out = Plane::filled(w, h, false);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut votes = 0u32;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0
                        && ny >= 0
                        && (nx as usize) < w
                        && (ny as usize) < h
                        && mask.at(nx as usize, ny as usize)
                    {
                        votes += 1;
                    }
                }
            }
            if votes >= majority {
                out.set(x as usize, y as usize, true);
            }
        }
    }
    Ok(out)
}

/// Segments leaf canopy into tree instances.
///
/// Pipeline: cutoff mask → 8-connected components → per-component median
/// despeckle → drop components below the area floor. Labels are 1-based in
/// raster order of each component's first pixel, with score 1.0.
///
/// An empty footprint is an error; a footprint with no canopy pixels yields
/// an empty set.
pub fn segment_canopy<F: Real>(
    ndvi: &Plane<Option<F>>,
    footprint: &BitMask,
    params: &SegmentationParams<F>,
) -> Result<InstanceMaskSet> {
    if footprint.count() == 0 {
        return Err(Error::EmptyFootprint);
    }
    let keep = keep_mask(ndvi, footprint, params.ndvi_cutoff)?;
    let mut instances = Vec::new();
    for comp in connected_components(&keep) {
        let smoothed = median_filter_mask(&comp, params.median_kernel)?;
        if smoothed.count() >= params.min_instance_area.max(1) {
            instances.push(Instance {
                label: instances.len() as u32 + 1,
                mask: smoothed,
                score: 1.0,
            });
        }
    }
    InstanceMaskSet::new(ndvi.width(), ndvi.height(), instances)
}

/// Cleans externally supplied masks: clears pixels whose NDVI is undefined
/// or below the cutoff, despeckles each mask, and drops emptied instances.
/// Labels and scores are preserved.
pub fn remove_noise<F: Real>(
    set: &InstanceMaskSet,
    ndvi: &Plane<Option<F>>,
    cutoff: F,
    median_kernel: usize,
) -> Result<InstanceMaskSet> {
    let mut kept = Vec::new();
    for inst in &set.instances {
        if !inst.mask.same_dims(ndvi) {
            return Err(Error::Validation(format!(
                "instance {} mask dimensions differ from NDVI plane",
                inst.label
            )));
        }
        let mut mask = inst.mask.clone();
        for (x, y) in inst.mask.true_pixels() {
            let ok = matches!(ndvi.at(x, y), Some(v) if v >= cutoff);
            if !ok {
                mask.set(x, y, false);
            }
        }
        let mask = median_filter_mask(&mask, median_kernel)?;
        if mask.count() > 0 {
            kept.push(Instance {
                label: inst.label,
                mask,
                score: inst.score,
            });
        }
    }
    InstanceMaskSet::new(set.width, set.height, kept)
}
