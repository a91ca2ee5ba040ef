//! Acceptance suite for the core library.
//!
//! Each test covers one numbered release criterion end to end and checks the
//! implementation against an oracle derived independently of the code under
//! test (exact rational arithmetic, brute-force re-derivations, closed forms,
//! or values frozen from high-precision external computation). One test per
//! criterion; the harness line for each test is the criterion's pass/fail
//! verdict. Criterion 10 (command-line batch behavior) lives in the CLI
//! crate's acceptance suite.

use std::time::{Duration, Instant};

use greenscan_core::error::Error;
use greenscan_core::indexes::{
    corrected_ndvi, ndvi, ndvi_correction_scale, ndvi_plane, pixel_temperature, temperature_plane,
};
use greenscan_core::pipeline::{process_capture, PipelineConfig};
use greenscan_core::raster::{BandOrder, BitMask, CaptureMeta, Plane, RgnImage, ThermalImage};
use greenscan_core::register::{register, RegistrationParams, Resampling};
use greenscan_core::segeval::{average_precision, COCO_THRESHOLDS};
use greenscan_core::segment::{connected_components, keep_mask, Instance, InstanceMaskSet};
use greenscan_core::stats::{bland_altman, kfold_indices, pearson};
use greenscan_core::synth::{generate, SceneSpec};
use greenscan_core::{io, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// ---------------------------------------------------------------------------
// Shared fixture helpers (deliberately simple, no reuse of library internals)
// ---------------------------------------------------------------------------

fn rect(w: usize, h: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> BitMask {
    let mut m = Plane::filled(w, h, false);
    for y in y0..y1.min(h) {
        for x in x0..x1.min(w) {
            m.set(x, y, true);
        }
    }
    m
}

fn meta(t_min: f64, t_max: f64) -> CaptureMeta {
    CaptureMeta {
        timestamp: 1_700_000_000.0,
        latitude: 42.37,
        longitude: -71.11,
        air_temperature_c: 5.0,
        t_min_c: t_min,
        t_max_c: t_max,
        band_order: BandOrder::RedGreenNir,
        device_id: "acceptance".into(),
        thermal_timestamp: None,
    }
}

// ---------------------------------------------------------------------------
// Criterion 1 — thermal decode: exact endpoints, affine map, frame speed
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_thermal_decode() {
    // Canonical range endpoints are exact; the midpoint matches the frozen
    // hand computation 128/255*50 - 10 to a millikelvin.
    assert_eq!(pixel_temperature::<f64>(0, -10.0, 40.0), -10.0);
    assert_eq!(pixel_temperature::<f64>(255, -10.0, 40.0), 40.0);
    assert!(
        (pixel_temperature::<f64>(128, -10.0, 40.0) - 15.098039215686274).abs() <= 1e-3,
        "midpoint decode drifted"
    );

    // The decode is the affine map t_min + p/255*(t_max - t_min): every code
    // in several ranges agrees with direct evaluation to 1e-9, and the step
    // between adjacent codes is constant.
    for &(lo, hi) in &[(-10.0, 40.0), (0.0, 100.0), (-40.0, -5.0), (5.5, 19.25)] {
        let step = (hi - lo) / 255.0;
        for p in 0u16..=255 {
            let direct = lo + f64::from(p) / 255.0 * (hi - lo);
            let got = pixel_temperature::<f64>(p as u8, lo, hi);
            assert!(
                (got - direct).abs() <= 1e-9,
                "range ({lo},{hi}) code {p}: {got} vs {direct}"
            );
            if p > 0 {
                let prev = pixel_temperature::<f64>((p - 1) as u8, lo, hi);
                assert!(
                    ((got - prev) - step).abs() <= 1e-9,
                    "non-uniform step at code {p} in ({lo},{hi})"
                );
            }
        }
        assert!((pixel_temperature::<f64>(0, lo, hi) - lo).abs() <= 1e-12);
        assert!((pixel_temperature::<f64>(255, lo, hi) - hi).abs() <= 1e-12);
    }

    // A full sensor frame decodes in well under a second.
    let counts: Vec<u8> = (0..160 * 120).map(|i| (i % 256) as u8).collect();
    let img = ThermalImage::new(Plane::new(160, 120, counts).unwrap(), -10.0, 40.0).unwrap();
    let t0 = Instant::now();
    let plane = temperature_plane::<f64>(&img);
    let elapsed = t0.elapsed();
    assert_eq!((plane.width(), plane.height()), (160, 120));
    assert_eq!(plane.at(0, 0), -10.0);
    assert!(
        elapsed < Duration::from_secs(1),
        "frame decode took {elapsed:?}"
    );

    println!("criterion 1 PASS — thermal decode endpoints, affinity, speed");
}

// ---------------------------------------------------------------------------
// Criterion 2 — NDVI against an exact rational oracle, plus megapixel speed
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_ndvi_rational_oracle_and_speed() {
    use num_rational::Ratio;

    // Exhaustive over all 65 536 channel pairs: NDVI is undefined exactly
    // when both channels are zero, and otherwise matches the exact rational
    // (nir-red)/(nir+red) to 1e-9.
    for nir in 0u16..=255 {
        for red in 0u16..=255 {
            let got = ndvi::<f64>(nir as u8, red as u8);
            if nir + red == 0 {
                assert!(got.is_none(), "NDVI must be undefined only at (0,0)");
            } else {
                let exact = Ratio::new(
                    i32::from(nir) - i32::from(red),
                    i32::from(nir) + i32::from(red),
                );
                let oracle = *exact.numer() as f64 / *exact.denom() as f64;
                let v = got.expect("defined whenever nir+red > 0");
                assert!(
                    (v - oracle).abs() <= 1e-9,
                    "nir={nir} red={red}: {v} vs {oracle}"
                );
                assert!((-1.0..=1.0).contains(&v));
            }
        }
    }

    // A million-pixel plane computes in under five seconds.
    let (w, h) = (1000, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let red: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
    let nir: Vec<u8> = (0..w * h).map(|_| rng.gen()).collect();
    let rgn = RgnImage::new(
        Plane::new(w, h, red.clone()).unwrap(),
        Plane::filled(w, h, 90),
        Plane::new(w, h, nir.clone()).unwrap(),
    )
    .unwrap();
    let t0 = Instant::now();
    let plane = ndvi_plane::<f64>(&rgn);
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(5),
        "megapixel NDVI took {elapsed:?}"
    );
    // Spot-check the plane against the scalar kernel.
    for &(x, y) in &[(0, 0), (999, 999), (123, 456), (500, 77)] {
        assert_eq!(plane.at(x, y), ndvi::<f64>(nir[y * w + x], red[y * w + x]));
    }

    println!("criterion 2 PASS — NDVI matches exact rational oracle; megapixel plane under 5 s");
}

// ---------------------------------------------------------------------------
// Criterion 3 — range-corrected NDVI scaling on 1000 seeded value sets
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_corrected_ndvi_range_scaling() {
    // Frozen hand case first: scale |min|/|max| = 0.2/0.8 = 0.25.
    let c = corrected_ndvi(&[0.8f64, -0.2, 0.4]).unwrap();
    for (got, want) in c.iter().zip(&[0.2, -0.05, 0.1]) {
        assert!((got - want).abs() <= 1e-15, "frozen case: {got} vs {want}");
    }
    assert!(matches!(
        ndvi_correction_scale::<f64>(&[]),
        Err(Error::EmptyMask)
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    let mut degenerate = 0usize;
    let mut scaled = 0usize;
    for case in 0..1000 {
        let n = rng.gen_range(1..=64);
        let raw: Vec<f64> = match case % 5 {
            // Mixed signs across the full index range.
            0 => (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            // Non-positive with an exact zero: the maximum is 0, which has
            // no defined correction.
            1 => {
                let mut v: Vec<f64> = (0..n).map(|_| -rng.gen_range(0.0..1.0f64)).collect();
                v[rng.gen_range(0..n)] = 0.0;
                v
            }
            // Strictly positive.
            2 => (0..n).map(|_| rng.gen_range(0.01..1.0)).collect(),
            // Strictly negative (maximum below zero still defines a scale).
            3 => (0..n).map(|_| -rng.gen_range(0.01..1.0f64)).collect(),
            // All zeros: degenerate.
            _ => vec![0.0; n],
        };
        // Oracle: plain fold for the extrema, then an element-wise product.
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &v in &raw {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        match corrected_ndvi(&raw) {
            Err(Error::DegenerateScale) => {
                assert_eq!(hi, 0.0, "case {case}: rejected but max = {hi}");
                degenerate += 1;
            }
            Ok(corr) => {
                assert_ne!(hi, 0.0, "case {case}: accepted but max = 0");
                let scale = lo.abs() / hi.abs();
                assert_eq!(corr.len(), raw.len());
                for (i, (&a, &b)) in raw.iter().zip(&corr).enumerate() {
                    assert!(
                        (b - a * scale).abs() <= 1e-12,
                        "case {case} element {i}: {b} vs {}",
                        a * scale
                    );
                }
                scaled += 1;
            }
            Err(e) => panic!("case {case}: unexpected error {e}"),
        }
    }
    assert_eq!(degenerate + scaled, 1000);
    assert!(degenerate >= 100, "degenerate family under-sampled");
    assert!(scaled >= 100, "scaled family under-sampled");

    println!("criterion 3 PASS — corrected NDVI equals raw × |min|/|max| on 1000 seeded sets");
}

// ---------------------------------------------------------------------------
// Criterion 4 — synthetic scene recovery through real file round trips
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_synthetic_scene_recovery() {
    let t0 = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let mut count_match = 0usize;
    let mut checked_trees = 0usize;

    for i in 0..50u64 {
        let noise_sigma = if i < 25 { 0.0 } else { 2.0 };
        let n_trees = 1 + (i as usize) % 4;
        let spec = SceneSpec::random(9000 + i, n_trees, noise_sigma, 160, 120).unwrap();
        let scene = generate(&spec).unwrap();

        // Round-trip through actual raster + sidecar files.
        let rgn_p = dir.path().join(format!("s{i:02}_rgn.png"));
        let thermal_p = dir.path().join(format!("s{i:02}_thermal.png"));
        let meta_p = dir.path().join(format!("s{i:02}_meta.json"));
        io::save_capture(&rgn_p, &thermal_p, &meta_p, &scene.pair).unwrap();
        let pair = io::load_capture(&rgn_p, &thermal_p, &meta_p).unwrap();

        let result = process_capture(&pair, &PipelineConfig::default()).unwrap();
        let found = result.instances.instances.len();
        if found == scene.truth.len() {
            count_match += 1;
        }

        if noise_sigma == 0.0 {
            assert_eq!(
                found,
                scene.truth.len(),
                "noiseless scene {i}: found {found}, planted {}",
                scene.truth.len()
            );
            for (inst, measured) in result.instances.instances.iter().zip(&result.trees) {
                // Pair each recovered instance with its planted tree by
                // best overlap, computed with direct pixel counting.
                let (best, iou) = scene
                    .truth
                    .iter()
                    .map(|t| {
                        let mut inter = 0usize;
                        let mut uni = 0usize;
                        for (a, b) in inst.mask.data().iter().zip(t.mask.data()) {
                            inter += usize::from(*a && *b);
                            uni += usize::from(*a || *b);
                        }
                        (
                            t,
                            if uni == 0 {
                                0.0
                            } else {
                                inter as f64 / uni as f64
                            },
                        )
                    })
                    .max_by(|a, b| a.1.total_cmp(&b.1))
                    .unwrap();
                assert!(
                    iou > 0.5,
                    "scene {i} instance {}: best IoU {iou}",
                    inst.label
                );
                assert!(
                    (measured.ndvi_corrected_mean - best.target_ndvi).abs() <= 0.02,
                    "scene {i} instance {}: NDVI {} vs target {}",
                    inst.label,
                    measured.ndvi_corrected_mean,
                    best.target_ndvi
                );
                assert!(
                    (measured.ctd_c - best.target_ctd_c).abs() <= 0.5,
                    "scene {i} instance {}: CTD {} vs target {}",
                    inst.label,
                    measured.ctd_c,
                    best.target_ctd_c
                );
                checked_trees += 1;
            }
        }
    }

    assert!(
        count_match >= 48,
        "tree counts recovered on only {count_match}/50 scenes (need ≥ 95%)"
    );
    assert!(checked_trees >= 25, "too few noiseless trees exercised");
    let elapsed = t0.elapsed();
    assert!(
        elapsed < Duration::from_secs(120),
        "50-scene round trip took {elapsed:?}"
    );

    println!(
        "criterion 4 PASS — {count_match}/50 scene counts recovered, {checked_trees} noiseless trees within 0.02 NDVI / 0.5 °C"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5 — registration round trip, identity warp, footprint counts
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_registration_roundtrip_and_footprint() {
    let rgn_dims = (4000, 3000);
    let thermal_dims = (160, 120);
    let param_sets = [
        RegistrationParams::new(50.0, 150.0, 0.57).unwrap(),
        RegistrationParams::identity(),
        RegistrationParams::new(12.5, -7.25, 0.8).unwrap(),
        RegistrationParams::new(-30.0, 22.0, 0.25).unwrap(),
    ];
    for params in &param_sets {
        for iy in 0..=24 {
            for ix in 0..=32 {
                let x = ix as f64 * 5.0 - 0.5; // includes off-grid fractional points
                let y = iy as f64 * 5.0 - 0.5;
                let (sx, sy) = params.thermal_to_rgn(x, y, rgn_dims, thermal_dims);
                let (bx, by) = params.rgn_to_thermal(sx, sy, rgn_dims, thermal_dims);
                let err = ((bx - x).powi(2) + (by - y).powi(2)).sqrt();
                assert!(
                    err <= 0.5,
                    "round trip error {err} px at ({x},{y}) with {params:?}"
                );
                // The maps are algebraic inverses, so the error is far
                // below the half-pixel budget in practice.
                assert!(err <= 1e-9, "inverse drifted to {err} px");
            }
        }
    }

    // Identity warp on matching dimensions is byte-for-byte lossless.
    let (w, h) = (64, 48);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    let band = |rng: &mut ChaCha8Rng| -> Plane<u8> {
        Plane::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap()
    };
    let rgn = RgnImage::new(band(&mut rng), band(&mut rng), band(&mut rng)).unwrap();
    let thermal = ThermalImage::new(
        Plane::new(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap(),
        -10.0,
        40.0,
    )
    .unwrap();
    let pair =
        greenscan_core::raster::CapturePair::new(rgn.clone(), thermal, meta(-10.0, 40.0)).unwrap();
    for resampling in [Resampling::Bilinear, Resampling::Nearest] {
        let reg = register(&pair, RegistrationParams::identity(), resampling).unwrap();
        assert_eq!(reg.rgn.red.data(), rgn.red.data(), "{resampling:?} red");
        assert_eq!(
            reg.rgn.green.data(),
            rgn.green.data(),
            "{resampling:?} green"
        );
        assert_eq!(reg.rgn.nir.data(), rgn.nir.data(), "{resampling:?} nir");
        assert_eq!(reg.footprint.count(), w * h);
    }

    // Integer translations shrink the footprint by exactly
    // max(0, W-|tx|) × max(0, H-|ty|), independent of zoom.
    let (wt, ht) = (160i64, 120i64);
    let cases: [(i64, i64); 9] = [
        (0, 0),
        (3, 5),
        (-4, 2),
        (7, -9),
        (50, 150),
        (-200, 10),
        (159, 119),
        (160, 120),
        (0, -119),
    ];
    for &(tx, ty) in &cases {
        for zoom in [1.0, 0.57] {
            let p = RegistrationParams::new(tx as f64, ty as f64, zoom).unwrap();
            let count = p.footprint_mask((wt as usize, ht as usize)).count();
            let expect = ((wt - tx.abs()).max(0) * (ht - ty.abs()).max(0)) as usize;
            assert_eq!(
                count, expect,
                "footprint for translate ({tx},{ty}) zoom {zoom}"
            );
        }
    }
    // The field calibration offsets exceed the sensor frame entirely.
    let field = RegistrationParams::new(50.0, 150.0, 0.57).unwrap();
    assert_eq!(field.footprint_mask((160, 120)).count(), 0);

    println!(
        "criterion 5 PASS — inverse mapping ≤ 0.5 px, identity lossless, footprint counts exact"
    );
}

// ---------------------------------------------------------------------------
// Criterion 6 — segmentation: cutoff semantics and component counts
// ---------------------------------------------------------------------------

/// Breadth-first flood fill, written independently of the union-find
/// labelling under test. Returns the number of 8-connected components.
fn flood_fill_components(mask: &BitMask) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut components = 0;
    let mut queue = std::collections::VecDeque::new();
    for sy in 0..h {
        for sx in 0..w {
            if !mask.at(sx, sy) || seen[sy * w + sx] {
                continue;
            }
            components += 1;
            seen[sy * w + sx] = true;
            queue.push_back((sx, sy));
            while let Some((x, y)) = queue.pop_front() {
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        if dx == 0 && dy == 0 {
                            continue;
                        }
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                            continue;
                        }
                        let (nx, ny) = (nx as usize, ny as usize);
                        if mask.at(nx, ny) && !seen[ny * w + nx] {
                            seen[ny * w + nx] = true;
                            queue.push_back((nx, ny));
                        }
                    }
                }
            }
        }
    }
    components
}

#[test]
fn criterion_06_segmentation_components_and_cutoff() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);

    // Component counts agree exactly with a flood-fill oracle on 100 random
    // planes of varying size and density.
    for case in 0..100 {
        let w = rng.gen_range(8..48);
        let h = rng.gen_range(8..40);
        let density = rng.gen_range(0.08..0.92);
        let mut mask = Plane::filled(w, h, false);
        for y in 0..h {
            for x in 0..w {
                if rng.gen_bool(density) {
                    mask.set(x, y, true);
                }
            }
        }
        let comps = connected_components(&mask);
        assert_eq!(
            comps.len(),
            flood_fill_components(&mask),
            "case {case}: component count"
        );
        // The components partition the mask: pixel totals match and every
        // component pixel is a mask pixel.
        let total: usize = comps.iter().map(Plane::count).sum();
        assert_eq!(total, mask.count(), "case {case}: partition size");
        for comp in &comps {
            for (x, y) in comp.true_pixels() {
                assert!(mask.at(x, y), "case {case}: stray pixel ({x},{y})");
            }
        }
    }

    // The pre-filter keep mask retains exactly the in-footprint pixels whose
    // raw NDVI is defined and at or above the cutoff.
    for rep in 0..10 {
        let (w, h) = (32, 24);
        let cutoff = 0.02f64;
        let mut plane: Plane<Option<f64>> = Plane::filled(w, h, None);
        let mut footprint = Plane::filled(w, h, false);
        for y in 0..h {
            for x in 0..w {
                if rng.gen_bool(0.8) {
                    plane.set(x, y, Some(rng.gen_range(-0.5..0.8)));
                }
                if rng.gen_bool(0.85) {
                    footprint.set(x, y, true);
                }
            }
        }
        // Force boundary values onto a few pixels so the inclusive edge is
        // exercised every repetition.
        plane.set(1, 1, Some(cutoff));
        plane.set(2, 1, Some(cutoff - 1e-15));
        footprint.set(1, 1, true);
        footprint.set(2, 1, true);
        let keep = keep_mask(&plane, &footprint, cutoff).unwrap();
        for y in 0..h {
            for x in 0..w {
                let qualifies = footprint.at(x, y) && plane.at(x, y).is_some_and(|v| v >= cutoff);
                assert_eq!(
                    keep.at(x, y),
                    qualifies,
                    "rep {rep}: keep mask wrong at ({x},{y})"
                );
            }
        }
        assert!(keep.at(1, 1), "inclusive cutoff must keep v == cutoff");
        assert!(!keep.at(2, 1), "below-cutoff pixel kept");
    }

    println!("criterion 6 PASS — component counts match flood fill on 100 planes; cutoff is inclusive and exact");
}

// ---------------------------------------------------------------------------
// Criterion 7 — average precision against a brute-force oracle
// ---------------------------------------------------------------------------

/// Independent AP re-derivation: greedy per-image matching by descending
/// score, global ranking, and a naive 101-point sweep that takes the best
/// precision at each recall level by direct scan.
fn oracle_ap(pairs: &[(&InstanceMaskSet, &InstanceMaskSet)], thr: f64) -> Option<f64> {
    let total_truths: usize = pairs.iter().map(|(_, t)| t.instances.len()).sum();
    let total_preds: usize = pairs.iter().map(|(p, _)| p.instances.len()).sum();
    if total_truths == 0 && total_preds == 0 {
        return None;
    }
    if total_truths == 0 || total_preds == 0 {
        return Some(0.0);
    }

    let iou = |a: &BitMask, b: &BitMask| -> f64 {
        let mut inter = 0usize;
        let mut uni = 0usize;
        for (x, y) in a.true_pixels() {
            if b.at(x, y) {
                inter += 1;
            }
            uni += 1;
        }
        for (x, y) in b.true_pixels() {
            if !a.at(x, y) {
                uni += 1;
            }
        }
        if uni == 0 {
            0.0
        } else {
            inter as f64 / uni as f64
        }
    };

    let mut scored: Vec<(f64, bool)> = Vec::new();
    for (pred, truth) in pairs {
        let mut order: Vec<usize> = (0..pred.instances.len()).collect();
        order.sort_by(|&a, &b| {
            pred.instances[b]
                .score
                .partial_cmp(&pred.instances[a].score)
                .unwrap()
        });
        let mut taken = vec![false; truth.instances.len()];
        for pi in order {
            let mut best: Option<(usize, f64)> = None;
            for (ti, t) in truth.instances.iter().enumerate() {
                if taken[ti] {
                    continue;
                }
                let v = iou(&pred.instances[pi].mask, &t.mask);
                if v >= thr && best.is_none_or(|(_, b)| v > b) {
                    best = Some((ti, v));
                }
            }
            let tp = if let Some((ti, _)) = best {
                taken[ti] = true;
                true
            } else {
                false
            };
            scored.push((pred.instances[pi].score, tp));
        }
    }
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut tp = 0usize;
    let mut prec = Vec::with_capacity(scored.len());
    let mut rec = Vec::with_capacity(scored.len());
    for (i, &(_, is_tp)) in scored.iter().enumerate() {
        if is_tp {
            tp += 1;
        }
        prec.push(tp as f64 / (i + 1) as f64);
        rec.push(tp as f64 / total_truths as f64);
    }
    let mut sum = 0.0;
    for k in 0..=100u32 {
        let q = f64::from(k) / 100.0;
        let mut best = 0.0f64;
        for i in 0..prec.len() {
            if rec[i] >= q && prec[i] > best {
                best = prec[i];
            }
        }
        sum += best;
    }
    Some(sum / 101.0)
}

fn random_mask_set(
    rng: &mut ChaCha8Rng,
    w: usize,
    h: usize,
    n: usize,
    coarse_scores: bool,
) -> InstanceMaskSet {
    let mut instances = Vec::with_capacity(n);
    for i in 0..n {
        let x0 = rng.gen_range(0..w - 3);
        let y0 = rng.gen_range(0..h - 3);
        let x1 = (x0 + rng.gen_range(2..=9)).min(w);
        let y1 = (y0 + rng.gen_range(2..=9)).min(h);
        // Coarse scores force ties so stable ranking is exercised too.
        let score = if coarse_scores {
            f64::from(rng.gen_range(1..=5u8)) / 5.0
        } else {
            rng.gen_range(0.01..1.0)
        };
        instances.push(Instance {
            label: i as u32 + 1,
            mask: rect(w, h, x0, y0, x1, y1),
            score,
        });
    }
    InstanceMaskSet::new(w, h, instances).unwrap()
}

#[test]
fn criterion_07_average_precision_oracle() -> Result<()> {
    let (w, h) = (24, 18);

    // Hand fixtures with frozen expectations.
    let truth_full = InstanceMaskSet::new(
        20,
        20,
        vec![Instance {
            label: 1,
            mask: rect(20, 20, 0, 0, 20, 20),
            score: 1.0,
        }],
    )?;
    let pred_eroded = InstanceMaskSet::new(
        20,
        20,
        vec![Instance {
            label: 1,
            mask: rect(20, 20, 0, 0, 16, 20),
            score: 0.9,
        }],
    )?;
    // 16·20 / 20·20 = IoU 0.80 exactly: full credit at 0.80, none at 0.85.
    assert_eq!(
        average_precision(&[(&pred_eroded, &truth_full)], 0.80)?,
        Some(1.0)
    );
    assert_eq!(
        average_precision(&[(&pred_eroded, &truth_full)], 0.85)?,
        Some(0.0)
    );

    // One truth of two missed entirely: recall caps at 0.5, AP = 51/101.
    let truth_two = InstanceMaskSet::new(
        w,
        h,
        vec![
            Instance {
                label: 1,
                mask: rect(w, h, 0, 0, 6, 6),
                score: 1.0,
            },
            Instance {
                label: 2,
                mask: rect(w, h, 12, 10, 20, 16),
                score: 1.0,
            },
        ],
    )?;
    let pred_one = InstanceMaskSet::new(
        w,
        h,
        vec![Instance {
            label: 1,
            mask: rect(w, h, 0, 0, 6, 6),
            score: 0.8,
        }],
    )?;
    assert_eq!(
        average_precision(&[(&pred_one, &truth_two)], 0.5)?,
        Some(51.0 / 101.0)
    );

    // Exact agreement with the brute-force oracle across randomized small
    // fixtures (1–4 masks per side, one to three images, score ties mixed
    // in) at both working thresholds.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC7);
    for case in 0..30 {
        let images = rng.gen_range(1..=3);
        let sets: Vec<(InstanceMaskSet, InstanceMaskSet)> = (0..images)
            .map(|_| {
                let np = rng.gen_range(0..=4);
                let nt = rng.gen_range(0..=4);
                let coarse = rng.gen_bool(0.5);
                (
                    random_mask_set(&mut rng, w, h, np, coarse),
                    random_mask_set(&mut rng, w, h, nt, false),
                )
            })
            .collect();
        let pairs: Vec<(&InstanceMaskSet, &InstanceMaskSet)> =
            sets.iter().map(|(p, t)| (p, t)).collect();
        for thr in [0.5, 0.75] {
            let got = average_precision(&pairs, thr)?;
            let want = oracle_ap(&pairs, thr);
            assert_eq!(got, want, "case {case} at threshold {thr}");
        }
    }

    // A perfect detector scores exactly 1.0 at every working threshold.
    for case in 0..5 {
        let truth = random_mask_set(&mut rng, w, h, 1 + case % 4, false);
        let mut pred = truth.clone();
        for inst in &mut pred.instances {
            inst.score = 1.0;
        }
        for thr in COCO_THRESHOLDS {
            assert_eq!(
                average_precision(&[(&pred, &truth)], thr)?,
                Some(1.0),
                "perfect detector at {thr}"
            );
        }
    }

    // AP never increases as the threshold tightens.
    for case in 0..20 {
        let np = rng.gen_range(1..=4);
        let nt = rng.gen_range(1..=4);
        let pred = random_mask_set(&mut rng, w, h, np, false);
        let truth = random_mask_set(&mut rng, w, h, nt, false);
        let mut last = f64::INFINITY;
        for thr in COCO_THRESHOLDS {
            let ap = average_precision(&[(&pred, &truth)], thr)?.unwrap();
            assert!(
                ap <= last + 1e-12,
                "case {case}: AP rose from {last} to {ap} at {thr}"
            );
            last = ap;
        }
    }

    println!("criterion 7 PASS — AP equals brute-force oracle; perfect detector 1.0; monotone in threshold");
    Ok(())
}

// ---------------------------------------------------------------------------
// Criterion 8 — statistics: Pearson, frozen p-values, Bland-Altman
// ---------------------------------------------------------------------------

/// Two-tailed p-values frozen from exact-rational r plus 50-digit evaluation
/// of the regularized incomplete beta (mpmath). Layout: x, y, r, p; the
/// oracle's digits are kept verbatim even beyond f64 precision.
#[allow(clippy::type_complexity, clippy::excessive_precision)]
const PEARSON_TABLE: [(&[i64], &[i64], f64, f64); 10] = [
    (&[1, 2, 3, 4, 5], &[2, 1, 4, 3, 5], 0.8, 0.10408803866182786),
    (
        &[0, 1, 2, 3, 4, 5],
        &[1, 3, 2, 5, 4, 6],
        0.8857142857142857,
        0.018845481049562682,
    ),
    (
        &[1, 2, 3, 4, 5, 6, 7],
        &[4, 1, 5, 2, 7, 3, 6],
        0.42857142857142855,
        0.33736831108582402,
    ),
    (
        &[1, 2, 3, 4, 5, 6, 7, 8],
        &[2, 1, 4, 3, 6, 5, 8, 7],
        0.9047619047619048,
        0.0020082755054294691,
    ),
    (
        &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9],
        &[9, 7, 8, 5, 6, 3, 4, 1, 2, 0],
        -0.9515151515151515,
        2.279854920641673e-5,
    ),
    (
        &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11],
        &[1, 0, 3, 2, 6, 4, 5, 9, 7, 8, 11, 10],
        0.9370629370629371,
        6.9931649532106084e-6,
    ),
    (
        &[0, 1, 2, 3, 4, 5, 6, 7, 8],
        &[2, 0, 1, 5, 3, 4, 8, 6, 7],
        0.85,
        0.0037047773275858034,
    ),
    (
        &[0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14],
        &[0, 2, 1, 3, 5, 4, 6, 8, 7, 9, 11, 10, 12, 14, 13],
        0.9821428571428571,
        8.1573335089782588e-11,
    ),
    (
        &[
            0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19,
        ],
        &[
            3, 1, 0, 4, 2, 8, 6, 5, 9, 7, 13, 11, 10, 14, 12, 18, 16, 15, 19, 17,
        ],
        0.9458646616541353,
        3.1136042140271098e-10,
    ),
    (
        &[
            0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16, 17, 18, 19, 20, 21, 22, 23,
            24, 25, 26, 27, 28, 29,
        ],
        &[
            1, 0, 3, 2, 5, 4, 7, 6, 9, 8, 11, 10, 13, 12, 15, 14, 17, 16, 19, 18, 21, 20, 23, 22,
            25, 24, 27, 26, 29, 28,
        ],
        0.9933259176863182,
        8.1804218484745577e-28,
    ),
];

#[test]
fn criterion_08_statistics() {
    // Perfect lines: r is ±1 to 1e-12 and the p-value collapses to zero.
    let x: Vec<f64> = (0..20).map(f64::from).collect();
    let up: Vec<f64> = x.iter().map(|v| 3.0 * v - 7.0).collect();
    let down: Vec<f64> = x.iter().map(|v| -2.0 * v + 5.0).collect();
    let cu = pearson(&x, &up).unwrap();
    assert!((cu.r - 1.0).abs() <= 1e-12, "r = {}", cu.r);
    assert_eq!(cu.p_value, 0.0);
    let cd = pearson(&x, &down).unwrap();
    assert!((cd.r + 1.0).abs() <= 1e-12, "r = {}", cd.r);
    assert_eq!(cd.p_value, 0.0);

    // Frozen table: r to 1e-12, two-tailed p to 1e-6.
    for (i, (xs, ys, want_r, want_p)) in PEARSON_TABLE.iter().enumerate() {
        let xf: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
        let yf: Vec<f64> = ys.iter().map(|&v| v as f64).collect();
        let c = pearson(&xf, &yf).unwrap();
        assert!(
            (c.r - want_r).abs() <= 1e-12,
            "table case {i}: r {} vs {want_r}",
            c.r
        );
        assert!(
            (c.p_value - want_p).abs() <= 1e-6,
            "table case {i}: p {} vs {want_p}",
            c.p_value
        );
        assert_eq!(c.n, xs.len());
    }

    // Bland-Altman on differences {-1, +1}: zero bias, sd √2, frozen
    // 1.96 σ limits.
    let ba = bland_altman(&[1.0f64, 3.0], &[2.0, 2.0]).unwrap();
    assert!((ba.bias - 0.0).abs() <= 1e-15);
    assert!((ba.upper_limit - 2.771_858_582_251_246_3).abs() <= 1e-9);
    assert!((ba.lower_limit + 2.771_858_582_251_246_3).abs() <= 1e-9);
    assert_eq!(ba.n, 2);
    assert_eq!(ba.outside_limits, 0);

    // Correlation is invariant under positive affine maps of either input
    // and flips sign with the direction.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    for rep in 0..20 {
        let n = rng.gen_range(5..40);
        let xs: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|v| 0.7 * v + rng.gen_range(-1.0..1.0))
            .collect();
        let base = match pearson(&xs, &ys) {
            Ok(c) => c,
            Err(_) => continue, // astronomically unlikely constant draw
        };
        let ax: Vec<f64> = xs.iter().map(|v| 2.5 * v - 3.0).collect();
        let cy: Vec<f64> = ys.iter().map(|v| 0.125 * v + 7.0).collect();
        let mapped = pearson(&ax, &cy).unwrap();
        assert!(
            (mapped.r - base.r).abs() <= 1e-12,
            "rep {rep}: affine map changed r from {} to {}",
            base.r,
            mapped.r
        );
        let flipped_x: Vec<f64> = xs.iter().map(|v| -1.5 * v + 2.0).collect();
        let flipped = pearson(&flipped_x, &ys).unwrap();
        assert!(
            (flipped.r + base.r).abs() <= 1e-12,
            "rep {rep}: negative scale must flip the sign"
        );
    }

    println!(
        "criterion 8 PASS — perfect-line r, frozen p table, Bland-Altman limits, affine invariance"
    );
}

// ---------------------------------------------------------------------------
// Criterion 9 — k-fold splits: balance, coverage, determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_kfold_splits() {
    let folds = kfold_indices(51, 3, 7).unwrap();
    assert_eq!(
        folds.iter().map(Vec::len).collect::<Vec<_>>(),
        vec![17, 17, 17],
        "51 records over 3 folds"
    );
    let mut all: Vec<usize> = folds.iter().flatten().copied().collect();
    all.sort_unstable();
    assert_eq!(all, (0..51).collect::<Vec<_>>(), "disjoint cover of 0..51");

    // Same seed reproduces the split exactly; a different seed moves it.
    assert_eq!(kfold_indices(51, 3, 7).unwrap(), folds);
    assert_ne!(kfold_indices(51, 3, 8).unwrap(), folds);

    // Uneven splits put the remainder on the leading folds.
    assert_eq!(
        kfold_indices(5, 3, 0)
            .unwrap()
            .iter()
            .map(Vec::len)
            .collect::<Vec<_>>(),
        vec![2, 2, 1]
    );
    assert!(kfold_indices(10, 1, 0).is_err(), "k must be at least 2");
    assert!(kfold_indices(3, 4, 0).is_err(), "k cannot exceed n");

    println!("criterion 9 PASS — 17/17/17 disjoint cover, seed-deterministic");
}
