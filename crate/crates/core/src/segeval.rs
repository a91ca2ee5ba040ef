//! Instance segmentation quality: mask IoU, greedy score-ordered matching,
//! and 101-point interpolated average precision, COCO style.

use crate::error::{Error, Result};
use crate::raster::BitMask;
use crate::segment::InstanceMaskSet;

/// The ten IoU thresholds 0.50, 0.55, …, 0.95 used for the mean AP.
pub const COCO_THRESHOLDS: [f64; 10] = [0.50, 0.55, 0.60, 0.65, 0.70, 0.75, 0.80, 0.85, 0.90, 0.95];

/// Intersection over union of two equally sized masks; 0.0 when the union is
/// empty.
pub fn mask_iou(a: &BitMask, b: &BitMask) -> Result<f64> {
    if !a.same_dims(b) {
        return Err(Error::Validation("IoU masks must share dimensions".into()));
    }
    let mut inter = 0usize;
    let mut union = 0usize;
    for (&pa, &pb) in a.data().iter().zip(b.data()) {
        if pa && pb {
            inter += 1;
        }
        if pa || pb {
            union += 1;
        }
    }
    if union == 0 {
        Ok(0.0)
    } else {
        Ok(inter as f64 / union as f64)
    }
}

/// One prediction's fate after matching: its score and whether it was a true
/// positive at the threshold.
#[derive(Debug, Clone, Copy)]
struct Ranked {
    score: f64,
    tp: bool,
}

/// Matches one image's predictions to its truths at `iou_threshold`
/// (inclusive). Predictions are taken in descending score order (stable on
/// ties); each claims the unmatched truth with the highest IoU at or above
/// the threshold, preferring the lower truth index on IoU ties.
fn match_image(
    pred: &InstanceMaskSet,
    truth: &InstanceMaskSet,
    iou_threshold: f64,
) -> Result<Vec<Ranked>> {
    for inst in &pred.instances {
        if !inst.score.is_finite() {
            return Err(Error::Validation(format!(
                "prediction {} has non-finite score",
                inst.label
            )));
        }
    }
    if (pred.width, pred.height) != (truth.width, truth.height) {
        return Err(Error::Validation(format!(
            "prediction set is {}x{}, truth set is {}x{}",
            pred.width, pred.height, truth.width, truth.height
        )));
    }

    let mut order: Vec<usize> = (0..pred.instances.len()).collect();
    order.sort_by(|&a, &b| {
        pred.instances[b]
            .score
            .partial_cmp(&pred.instances[a].score)
            .expect("scores are finite")
    });

    let mut truth_taken = vec![false; truth.instances.len()];
    let mut ranked = Vec::with_capacity(order.len());
    for pi in order {
        let p = &pred.instances[pi];
        let mut best: Option<(usize, f64)> = None;
        for (ti, t) in truth.instances.iter().enumerate() {
            if truth_taken[ti] {
                continue;
            }
            let iou = mask_iou(&p.mask, &t.mask)?;
            if iou < iou_threshold {
                continue;
            }
            // Strict > keeps the lowest truth index on exact IoU ties.
            if best.is_none_or(|(_, b)| iou > b) {
                best = Some((ti, iou));
            }
        }
        let tp = if let Some((ti, _)) = best {
            truth_taken[ti] = true;
            true
        } else {
            false
        };
        ranked.push(Ranked { score: p.score, tp });
    }
    Ok(ranked)
}

/// 101-point interpolated AP over a dataset of (prediction, truth) pairs at
/// one IoU threshold.
///
/// Matching happens per image; the precision/recall curve ranks all
/// predictions together by descending score. Returns `None` when the dataset
/// has neither truths nor predictions; a dataset with predictions but no
/// truths (or truths but no predictions) scores 0.0.
pub fn average_precision(
    pairs: &[(&InstanceMaskSet, &InstanceMaskSet)],
    iou_threshold: f64,
) -> Result<Option<f64>> {
    if !(0.0..=1.0).contains(&iou_threshold) {
        return Err(Error::Validation(format!(
            "IoU threshold {iou_threshold} must lie in [0, 1]"
        )));
    }
    let total_truths: usize = pairs.iter().map(|(_, t)| t.instances.len()).sum();
    let total_preds: usize = pairs.iter().map(|(p, _)| p.instances.len()).sum();
    if total_truths == 0 && total_preds == 0 {
        return Ok(None);
    }
    if total_truths == 0 || total_preds == 0 {
        return Ok(Some(0.0));
    }

    let mut ranked: Vec<Ranked> = Vec::with_capacity(total_preds);
    for (p, t) in pairs {
        ranked.extend(match_image(p, t, iou_threshold)?);
    }
    // Global rank: descending score, stable across the per-image order.
    ranked.sort_by(|a, b| b.score.partial_cmp(&a.score).expect("finite scores"));

    let mut tp = 0usize;
    let mut precisions = Vec::with_capacity(ranked.len());
    let mut recalls = Vec::with_capacity(ranked.len());
    for (i, r) in ranked.iter().enumerate() {
        if r.tp {
            tp += 1;
        }
        precisions.push(tp as f64 / (i + 1) as f64);
        recalls.push(tp as f64 / total_truths as f64);
    }

    // Monotone envelope from the right, then sample 101 recall points.
    let mut envelope = precisions.clone();
    for i in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[i] = envelope[i].max(envelope[i + 1]);
    }
    let mut sum = 0.0;
    for k in 0..=100u32 {
        let r = f64::from(k) / 100.0;
        let p = recalls
            .iter()
            .position(|&rec| rec >= r)
            .map_or(0.0, |idx| envelope[idx]);
        sum += p;
    }
    Ok(Some(sum / 101.0))
}

/// Convenience wrapper for a single image pair.
pub fn average_precision_single(
    pred: &InstanceMaskSet,
    truth: &InstanceMaskSet,
    iou_threshold: f64,
) -> Result<Option<f64>> {
    average_precision(&[(pred, truth)], iou_threshold)
}

/// AP at each COCO threshold plus the headline numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct ApSummary {
    pub per_threshold: Vec<(f64, Option<f64>)>,
    pub ap50: Option<f64>,
    pub ap75: Option<f64>,
    /// Mean over thresholds with a defined AP.
    pub mean_ap: Option<f64>,
}

/// Evaluates AP at all ten COCO thresholds.
pub fn evaluate(pairs: &[(&InstanceMaskSet, &InstanceMaskSet)]) -> Result<ApSummary> {
    let mut per_threshold = Vec::with_capacity(COCO_THRESHOLDS.len());
    for &thr in &COCO_THRESHOLDS {
        per_threshold.push((thr, average_precision(pairs, thr)?));
    }
    let defined: Vec<f64> = per_threshold.iter().filter_map(|(_, ap)| *ap).collect();
    let mean_ap = if defined.is_empty() {
        None
    } else {
        Some(defined.iter().sum::<f64>() / defined.len() as f64)
    };
    let ap_at = |t: f64| {
        per_threshold
            .iter()
            .find(|(thr, _)| (*thr - t).abs() < 1e-9)
            .and_then(|(_, ap)| *ap)
    };
    Ok(ApSummary {
        ap50: ap_at(0.50),
        ap75: ap_at(0.75),
        mean_ap,
        per_threshold,
    })
}
