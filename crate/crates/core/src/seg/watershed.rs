//! Marker-controlled watershed for splitting touching nuclei: markers
//! are the h-maxima of the exact Euclidean distance transform, flooding
//! runs on descending distance with row-major tie-breaking so results
//! are deterministic and platform-stable.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::raster::{connected_components, BinaryMask, Connectivity, LabelMap};

pub const DEFAULT_H: f64 = 1.0;

/// Stand-in for unreachable distances while the lower envelope is
/// built; large enough to dominate any squared pixel distance, small
/// enough that envelope intersections stay finite.
const FAR: f64 = 1e20;

/// One-dimensional squared-distance transform by lower envelope of
/// parabolas rooted at (i, f[i]).
fn edt_1d(f: &[f64], d: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = -FAR;
    z[1] = FAR;
    for q in 1..n {
        let qf = q as f64;
        loop {
            let vf = v[k] as f64;
            let s = ((f[q] + qf * qf) - (f[v[k]] + vf * vf)) / (2.0 * qf - 2.0 * vf);
            if s <= z[k] {
                k -= 1;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = FAR;
                break;
            }
        }
    }
    k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let diff = q as f64 - v[k] as f64;
        *out = diff * diff + f[v[k]];
    }
}

/// Exact Euclidean distance from each pixel to the nearest background
/// pixel (0 on background, 0 everywhere if there is no foreground).
/// A mask with no background at all saturates to the FAR sentinel.
pub fn distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = (mask.width(), mask.height());
    let mut sq = vec![0.0f64; w * h];
    for (dst, &fg) in sq.iter_mut().zip(mask.data()) {
        *dst = if fg { FAR } else { 0.0 };
    }
    let mut col_in = vec![0.0f64; h];
    let mut col_out = vec![0.0f64; h];
    for c in 0..w {
        for r in 0..h {
            col_in[r] = sq[r * w + c];
        }
        edt_1d(&col_in, &mut col_out);
        for r in 0..h {
            sq[r * w + c] = col_out[r];
        }
    }
    let mut row_in = vec![0.0f64; w];
    let mut row_out = vec![0.0f64; w];
    for r in 0..h {
        row_in.copy_from_slice(&sq[r * w..(r + 1) * w]);
        edt_1d(&row_in, &mut row_out);
        sq[r * w..(r + 1) * w].copy_from_slice(&row_out);
    }
    sq.iter().map(|&v| v.sqrt()).collect()
}

/// Grayscale reconstruction by dilation of `marker` under `mask`
/// (marker <= mask pointwise), 8-connected, using the hybrid
/// raster-scan plus queue algorithm.
fn reconstruct_by_dilation(marker: &[f64], mask: &[f64], width: usize, height: usize) -> Vec<f64> {
    let mut j: Vec<f64> = marker.to_vec();
    let forward: [(i64, i64); 4] = [(-1, -1), (-1, 0), (-1, 1), (0, -1)];
    let backward: [(i64, i64); 4] = [(1, 1), (1, 0), (1, -1), (0, 1)];
    let all: [(i64, i64); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    let at = |r: i64, c: i64| -> Option<usize> {
        (r >= 0 && c >= 0 && r < height as i64 && c < width as i64)
            .then(|| r as usize * width + c as usize)
    };

    for r in 0..height as i64 {
        for c in 0..width as i64 {
            let i = (r * width as i64 + c) as usize;
            let mut best = j[i];
            for (dr, dc) in forward {
                if let Some(q) = at(r + dr, c + dc) {
                    best = best.max(j[q]);
                }
            }
            j[i] = best.min(mask[i]);
        }
    }

    let mut queue = VecDeque::new();
    for r in (0..height as i64).rev() {
        for c in (0..width as i64).rev() {
            let i = (r * width as i64 + c) as usize;
            let mut best = j[i];
            for (dr, dc) in backward {
                if let Some(q) = at(r + dr, c + dc) {
                    best = best.max(j[q]);
                }
            }
            j[i] = best.min(mask[i]);
            for (dr, dc) in backward {
                if let Some(q) = at(r + dr, c + dc) {
                    if j[q] < j[i] && j[q] < mask[q] {
                        queue.push_back(i);
                        break;
                    }
                }
            }
        }
    }

    while let Some(i) = queue.pop_front() {
        let (r, c) = ((i / width) as i64, (i % width) as i64);
        for (dr, dc) in all {
            if let Some(q) = at(r + dr, c + dc) {
                if j[q] < j[i] && j[q] < mask[q] {
                    j[q] = j[i].min(mask[q]);
                    queue.push_back(q);
                }
            }
        }
    }
    j
}

/// Foreground pixels whose distance peak rises at least `h` above its
/// surroundings (the h-maxima of the distance transform).
fn h_maxima_markers(dt: &[f64], mask: &BinaryMask, h: f64) -> BinaryMask {
    let (w, ht) = (mask.width(), mask.height());
    let marker: Vec<f64> = dt.iter().map(|&v| v - h).collect();
    let rec = reconstruct_by_dilation(&marker, dt, w, ht);
    BinaryMask::from_fn(w, ht, |r, c| {
        let i = r * w + c;
        mask.get(r, c) && dt[i] - rec[i] >= h - 1e-7
    })
}

pub fn watershed_split(mask: &BinaryMask) -> LabelMap {
    watershed_split_h(mask, DEFAULT_H)
}

/// Watershed with an explicit h-maxima depth. Larger `h` merges
/// shallower peaks (fewer splits); `h <= 0` degenerates to plain
/// connected-component labeling.
pub fn watershed_split_h(mask: &BinaryMask, h: f64) -> LabelMap {
    let (w, ht) = (mask.width(), mask.height());
    if mask.count_foreground() == 0 {
        return LabelMap::zeros(w, ht);
    }
    let dt = distance_transform(mask);
    let markers = h_maxima_markers(&dt, mask, h);
    let mut labels = connected_components(&markers, Connectivity::Eight);

    // flood outward from markers, deepest pixels first; ties resolve to
    // the earliest pixel in raster order
    let mut heap: BinaryHeap<(u64, Reverse<usize>)> = BinaryHeap::new();
    for (i, &label) in labels.data().iter().enumerate() {
        if label != 0 {
            heap.push((dt[i].to_bits(), Reverse(i)));
        }
    }
    let offsets: [(i64, i64); 8] = [
        (-1, -1),
        (-1, 0),
        (-1, 1),
        (0, -1),
        (0, 1),
        (1, -1),
        (1, 0),
        (1, 1),
    ];
    while let Some((_, Reverse(i))) = heap.pop() {
        let (r, c) = ((i / w) as i64, (i % w) as i64);
        let label = labels.data()[i];
        for (dr, dc) in offsets {
            let (nr, nc) = (r + dr, c + dc);
            if nr < 0 || nc < 0 || nr >= ht as i64 || nc >= w as i64 {
                continue;
            }
            let q = nr as usize * w + nc as usize;
            if mask.data()[q] && labels.data()[q] == 0 {
                labels.set(nr as usize, nc as usize, label);
                heap.push((dt[q].to_bits(), Reverse(q)));
            }
        }
    }
    labels
}
