//! Shape encodings derived from instance label maps: per-nucleus
//! normalized distance maps (erosion depth), topological skeletons, and
//! their sum, the skeleton map used as a training target.

use rayon::prelude::*;

use crate::raster::{BinaryMask, Connectivity, LabelMap, PixelCoord, Region};

/// Dense float field aligned with a label map. Values are meaningful per
/// module: distance maps lie in `[0, 1]`, skeleton maps in `[0, 2]`.
pub type FloatField = crate::io::FloatMap;

/// Per-nucleus normalized erosion-depth distance map.
///
/// Each nucleus is eroded repeatedly (4-connectivity, other labels and
/// image borders count as background) until it disappears. A pixel
/// removed by erosion step `k` out of `K` total steps gets value `k / K`,
/// so boundary pixels get `1 / K` and the deepest pixels get `1`.
/// Background stays `0`.
pub fn distance_map(labels: &LabelMap) -> FloatField {
    let (w, h) = (labels.width(), labels.height());
    let mut out = FloatField::zeros(w, h);
    let regions = labels.regions();
    let parts: Vec<(Region, Vec<f32>)> = regions
        .par_iter()
        .map(|&region| (region, nucleus_distance(labels, region)))
        .collect();
    for (region, local) in parts {
        let lw = region.max_col - region.min_col + 1;
        for (i, &v) in local.iter().enumerate() {
            if v > 0.0 {
                let row = region.min_row + i / lw;
                let col = region.min_col + i % lw;
                out.set(row, col, v);
            }
        }
    }
    out
}

/// Erosion depths for one nucleus, computed on its bounding box.
/// Returns normalized values in row-major bbox order, 0 outside the
/// nucleus.
fn nucleus_distance(labels: &LabelMap, region: Region) -> Vec<f32> {
    let lw = region.max_col - region.min_col + 1;
    let lh = region.max_row - region.min_row + 1;
    let mut mask = BinaryMask::from_fn(lw, lh, |r, c| {
        labels.get(region.min_row + r, region.min_col + c) == region.label
    });
    let mut depth = vec![0u32; lw * lh];
    let mut step = 0u32;
    while mask.count_foreground() > 0 {
        step += 1;
        let eroded = crate::raster::erode_once(&mask, Connectivity::Four);
        for ((d, &was), &is) in depth.iter_mut().zip(mask.data()).zip(eroded.data()) {
            if was && !is {
                *d = step;
            }
        }
        mask = eroded;
    }
    let total = step as f32;
    depth
        .into_iter()
        .map(|k| if k == 0 { 0.0 } else { k as f32 / total })
        .collect()
}

/// Topological skeleton of each nucleus: pixels whose nearest contour
/// pixel (Euclidean, within the nucleus's own contour) is not unique,
/// where "nearest" admits any contour pixel within 0.5 of the minimum
/// distance. Nuclei whose skeleton would be empty under that rule
/// instead contribute the pixels farthest from their contour, so every
/// nucleus has a nonempty skeleton.
pub fn topo_skeleton(labels: &LabelMap) -> BinaryMask {
    let (w, h) = (labels.width(), labels.height());
    let mut out = BinaryMask::filled(w, h, false);
    let regions = labels.regions();
    let parts: Vec<(Region, Vec<PixelCoord>)> = regions
        .par_iter()
        .map(|&region| (region, nucleus_skeleton(labels, region)))
        .collect();
    for (_, pixels) in parts {
        for p in pixels {
            out.set(p.row, p.col, true);
        }
    }
    out
}

fn nucleus_skeleton(labels: &LabelMap, region: Region) -> Vec<PixelCoord> {
    let (w, h) = (labels.width(), labels.height());
    let mut pixels = Vec::with_capacity(region.area);
    for row in region.min_row..=region.max_row {
        for col in region.min_col..=region.max_col {
            if labels.get(row, col) == region.label {
                pixels.push(PixelCoord::new(row, col));
            }
        }
    }
    // contour of this nucleus alone: 4-neighbor is background, OOB, or another label
    let contour: Vec<PixelCoord> = pixels
        .iter()
        .copied()
        .filter(|&p| {
            Connectivity::Four.offsets().iter().any(|&d| {
                p.offset(d, h, w)
                    .map(|q| labels.get(q.row, q.col) != region.label)
                    .unwrap_or(true)
            })
        })
        .collect();

    let sq_dist = |p: PixelCoord, c: PixelCoord| -> i64 {
        let dr = p.row as i64 - c.row as i64;
        let dc = p.col as i64 - c.col as i64;
        dr * dr + dc * dc
    };
    let mut skeleton = Vec::new();
    let mut min_sq_dists = Vec::with_capacity(pixels.len());
    for &p in &pixels {
        let mut min_sq = i64::MAX;
        for &c in &contour {
            min_sq = min_sq.min(sq_dist(p, c));
        }
        min_sq_dists.push(min_sq);
        // a contour pixel ties the minimum when d <= d_min + 0.5, i.e.
        // d^2 <= d_min^2 + d_min + 0.25 (all quantities exact in f64)
        let threshold = min_sq as f64 + (min_sq as f64).sqrt() + 0.25;
        let mut near = 0usize;
        for &c in &contour {
            if (sq_dist(p, c) as f64) <= threshold {
                near += 1;
                if near >= 2 {
                    break;
                }
            }
        }
        if near >= 2 {
            skeleton.push(p);
        }
    }
    if skeleton.is_empty() && !pixels.is_empty() {
        let max_sq = min_sq_dists.iter().copied().max().unwrap();
        for (i, &p) in pixels.iter().enumerate() {
            if min_sq_dists[i] == max_sq {
                skeleton.push(p);
            }
        }
    }
    skeleton
}

/// Skeleton map: the per-nucleus normalized distance map plus a binary
/// skeleton indicator. Values lie in `[0, 2]`; only skeleton pixels can
/// exceed 1.
pub fn skeleton_map(labels: &LabelMap) -> FloatField {
    let mut map = distance_map(labels);
    let skeleton = topo_skeleton(labels);
    for row in 0..map.height() {
        for col in 0..map.width() {
            if skeleton.get(row, col) {
                let v = map.get(row, col);
                map.set(row, col, v + 1.0);
            }
        }
    }
    map
}
