//! Instance-segmentation evaluation: IoU-based matching, detection /
//! segmentation / panoptic quality, and the aggregated Jaccard index.

pub mod watershed;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::LabelMap;

#[derive(Debug, Error)]
pub enum SegError {
    #[error("label maps differ in size: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
}

/// Instance matching between a prediction and a ground truth:
/// `pairs` holds (gt label, pred label, IoU) for every pair with
/// IoU > 0.5, ascending by gt label.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub pairs: Vec<(u32, u32, f64)>,
    pub unmatched_gt: Vec<u32>,
    pub unmatched_pred: Vec<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegReport {
    pub dq: f64,
    pub sq: f64,
    pub pq: f64,
    pub aji: f64,
}

fn check_dims(pred: &LabelMap, gt: &LabelMap) -> Result<(), SegError> {
    if pred.width() != gt.width() || pred.height() != gt.height() {
        return Err(SegError::DimensionMismatch {
            a_width: pred.width(),
            a_height: pred.height(),
            b_width: gt.width(),
            b_height: gt.height(),
        });
    }
    Ok(())
}

struct OverlapStats {
    gt_areas: BTreeMap<u32, u64>,
    pred_areas: BTreeMap<u32, u64>,
    inter: BTreeMap<(u32, u32), u64>,
}

fn overlap_stats(pred: &LabelMap, gt: &LabelMap) -> OverlapStats {
    let mut stats = OverlapStats {
        gt_areas: BTreeMap::new(),
        pred_areas: BTreeMap::new(),
        inter: BTreeMap::new(),
    };
    for (&p, &g) in pred.data().iter().zip(gt.data()) {
        if g != 0 {
            *stats.gt_areas.entry(g).or_insert(0) += 1;
        }
        if p != 0 {
            *stats.pred_areas.entry(p).or_insert(0) += 1;
        }
        if g != 0 && p != 0 {
            *stats.inter.entry((g, p)).or_insert(0) += 1;
        }
    }
    stats
}

/// Matches prediction and ground-truth instances by strict IoU > 0.5,
/// which makes the assignment unique without any search.
pub fn iou_matching(pred: &LabelMap, gt: &LabelMap) -> Result<MatchResult, SegError> {
    check_dims(pred, gt)?;
    let stats = overlap_stats(pred, gt);
    let mut pairs = Vec::new();
    let mut matched_gt = BTreeSet::new();
    let mut matched_pred = BTreeSet::new();
    for (&(g, p), &inter) in &stats.inter {
        let union = stats.gt_areas[&g] + stats.pred_areas[&p] - inter;
        let iou = inter as f64 / union as f64;
        if iou > 0.5 {
            pairs.push((g, p, iou));
            matched_gt.insert(g);
            matched_pred.insert(p);
        }
    }
    let unmatched_gt = stats
        .gt_areas
        .keys()
        .copied()
        .filter(|g| !matched_gt.contains(g))
        .collect();
    let unmatched_pred = stats
        .pred_areas
        .keys()
        .copied()
        .filter(|p| !matched_pred.contains(p))
        .collect();
    Ok(MatchResult {
        pairs,
        unmatched_gt,
        unmatched_pred,
    })
}

/// Detection, segmentation, and panoptic quality of a match result.
/// Both maps empty scores (1, 1, 1); exactly one empty scores (0, 0, 0).
pub fn dq_sq_pq(m: &MatchResult) -> (f64, f64, f64) {
    let tp = m.pairs.len();
    let fp = m.unmatched_pred.len();
    let fn_ = m.unmatched_gt.len();
    if tp + fp + fn_ == 0 {
        return (1.0, 1.0, 1.0);
    }
    let dq = tp as f64 / (tp as f64 + 0.5 * fp as f64 + 0.5 * fn_ as f64);
    let sq = if tp == 0 {
        0.0
    } else {
        m.pairs.iter().map(|&(_, _, iou)| iou).sum::<f64>() / tp as f64
    };
    (dq, sq, dq * sq)
}

/// Aggregated Jaccard index. Ground-truth instances, in ascending label
/// order, each claim the still-unclaimed overlapping prediction with the
/// highest IoU (ties to the smaller pred label). C sums the matched
/// intersections; U sums the matched unions plus the areas of unmatched
/// ground truths and never-claimed predictions.
pub fn aji(pred: &LabelMap, gt: &LabelMap) -> Result<f64, SegError> {
    check_dims(pred, gt)?;
    let stats = overlap_stats(pred, gt);
    let mut used: BTreeSet<u32> = BTreeSet::new();
    let mut c: u64 = 0;
    let mut u: u64 = 0;
    for (&g, &g_area) in &stats.gt_areas {
        let mut best: Option<(u32, f64, u64)> = None;
        for (&(gg, p), &inter) in stats.inter.range((g, 0)..=(g, u32::MAX)) {
            debug_assert_eq!(gg, g);
            if used.contains(&p) {
                continue;
            }
            let union = g_area + stats.pred_areas[&p] - inter;
            let iou = inter as f64 / union as f64;
            if best.is_none_or(|(_, best_iou, _)| iou > best_iou) {
                best = Some((p, iou, inter));
            }
        }
        match best {
            Some((p, _, inter)) => {
                c += inter;
                u += g_area + stats.pred_areas[&p] - inter;
                used.insert(p);
            }
            None => u += g_area,
        }
    }
    for (&p, &p_area) in &stats.pred_areas {
        if !used.contains(&p) {
            u += p_area;
        }
    }
    if u == 0 {
        return Ok(1.0);
    }
    Ok(c as f64 / u as f64)
}

/// Full evaluation of one prediction against one ground truth.
pub fn evaluate(pred: &LabelMap, gt: &LabelMap) -> Result<SegReport, SegError> {
    let m = iou_matching(pred, gt)?;
    let (dq, sq, pq) = dq_sq_pq(&m);
    let aji = aji(pred, gt)?;
    Ok(SegReport { dq, sq, pq, aji })
}
