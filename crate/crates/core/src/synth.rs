//! Seeded generation of nucleus-like polygon label maps: radially
//! perturbed ellipses, rasterized with a scan-line fill and placed by
//! rejection sampling with configurable overlap or gap rules.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{Connectivity, LabelMap, PixelCoord};

/// Attempt budget per nucleus before placement gives up.
pub const MAX_ATTEMPTS_PER_NUCLEUS: usize = 1000;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(
        "placed only {placed} of {requested} nuclei after {attempts} attempts each; \
         the configuration is too dense for the canvas"
    )]
    PlacementExhausted {
        placed: usize,
        requested: usize,
        attempts: usize,
    },
    #[error(transparent)]
    Io(#[from] crate::io::IoError),
}

/// Generation parameters. Ranges are inclusive `[min, max]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub width: usize,
    pub height: usize,
    /// How many nuclei to place per image, drawn uniformly.
    pub nuclei_count: (u32, u32),
    /// Base radius in pixels, drawn uniformly.
    pub radius: (f64, f64),
    /// Shape roughness in `[0, 1]`: scales both the radial vertex
    /// perturbation and the ellipse eccentricity.
    pub irregularity: f64,
    pub vertex_count: usize,
    pub allow_overlap: bool,
    /// With `allow_overlap`, the largest fraction of a nucleus's
    /// original area that later nuclei may claim.
    pub max_overlap_fraction: f64,
    /// Without `allow_overlap`, the smallest allowed distance between
    /// pixels of different nuclei. 0 and 1 both permit touching.
    pub min_gap: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            width: 256,
            height: 256,
            nuclei_count: (6, 14),
            radius: (6.0, 18.0),
            irregularity: 0.3,
            vertex_count: 24,
            allow_overlap: true,
            max_overlap_fraction: 0.25,
            min_gap: 1.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidConfig(msg));
        if self.width == 0 || self.height == 0 {
            return fail(format!("canvas {}x{} is empty", self.width, self.height));
        }
        if self.nuclei_count.0 < 1 || self.nuclei_count.0 > self.nuclei_count.1 {
            return fail(format!(
                "nuclei_count range [{}, {}] must satisfy 1 <= min <= max",
                self.nuclei_count.0, self.nuclei_count.1
            ));
        }
        if !(self.radius.0.is_finite() && self.radius.1.is_finite())
            || self.radius.0 < 2.0
            || self.radius.0 > self.radius.1
        {
            return fail(format!(
                "radius range [{}, {}] must satisfy 2 <= min <= max",
                self.radius.0, self.radius.1
            ));
        }
        if !self.irregularity.is_finite() || !(0.0..=1.0).contains(&self.irregularity) {
            return fail(format!("irregularity {} outside [0, 1]", self.irregularity));
        }
        if self.vertex_count < 8 {
            return fail(format!("vertex_count {} below minimum 8", self.vertex_count));
        }
        if !self.max_overlap_fraction.is_finite()
            || !(0.0..1.0).contains(&self.max_overlap_fraction)
        {
            return fail(format!(
                "max_overlap_fraction {} outside [0, 1)",
                self.max_overlap_fraction
            ));
        }
        if !self.min_gap.is_finite() || self.min_gap < 0.0 {
            return fail(format!("min_gap {} must be nonnegative", self.min_gap));
        }
        Ok(())
    }
}

/// One candidate nucleus: pixels plus the bounding box they span.
struct Candidate {
    pixels: Vec<PixelCoord>,
    min_row: usize,
    max_row: usize,
    min_col: usize,
    max_col: usize,
}

/// Per-placed-nucleus bookkeeping for overlap accounting.
struct Placed {
    original_area: usize,
    lost: usize,
    min_row: usize,
    max_row: usize,
    min_col: usize,
    max_col: usize,
}

/// Generate one label map. Deterministic in the config, including the
/// seed: the RNG is ChaCha8 seeded with `cfg.seed`, and every random
/// draw happens in a fixed order.
pub fn gen_nuclei_masks(cfg: &SynthConfig) -> Result<LabelMap, SynthError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let requested = rng.gen_range(cfg.nuclei_count.0..=cfg.nuclei_count.1) as usize;
    let mut labels = LabelMap::zeros(cfg.width, cfg.height);
    let mut placed: Vec<Placed> = Vec::with_capacity(requested);
    for index in 0..requested {
        let mut committed = false;
        for _ in 0..MAX_ATTEMPTS_PER_NUCLEUS {
            let Some(cand) = sample_polygon(cfg, &mut rng) else {
                continue;
            };
            if admit(cfg, &labels, &placed, &cand) {
                commit(&mut labels, &mut placed, cand, (index + 1) as u32);
                committed = true;
                break;
            }
        }
        if !committed {
            return Err(SynthError::PlacementExhausted {
                placed: index,
                requested,
                attempts: MAX_ATTEMPTS_PER_NUCLEUS,
            });
        }
    }
    Ok(labels)
}

/// Draw one polygon and rasterize it. `None` when the shape cannot fit
/// the canvas or rasterizes to an invalid pixel set.
fn sample_polygon(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> Option<Candidate> {
    let v = cfg.vertex_count;
    let radius = rng.gen_range(cfg.radius.0..=cfg.radius.1);
    let aspect = rng.gen_range(1.0..=1.0 + 0.5 * cfg.irregularity);
    let rotation = rng.gen_range(0.0..std::f64::consts::PI);
    let mut eta = vec![0.0f64; v];
    for e in eta.iter_mut() {
        *e = rng.gen_range(-1.0..=1.0);
    }

    // farthest any vertex can sit from the center
    let reach = (1.0 + cfg.irregularity) * radius * aspect;
    let margin = reach + 1.0;
    if 2.0 * margin >= cfg.width as f64 || 2.0 * margin >= cfg.height as f64 {
        return None;
    }
    let cx = rng.gen_range(margin..cfg.width as f64 - margin);
    let cy = rng.gen_range(margin..cfg.height as f64 - margin);

    // area-preserving ellipse axes, then per-vertex radial perturbation
    // smoothed by a cyclic 3-tap moving average
    let (a, b) = (radius * aspect, radius / aspect);
    let (sin_rot, cos_rot) = rotation.sin_cos();
    let mut vertices = Vec::with_capacity(v);
    for k in 0..v {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / v as f64;
        let smooth = (eta[(k + v - 1) % v] + eta[k] + eta[(k + 1) % v]) / 3.0;
        let scale = 1.0 + cfg.irregularity * smooth;
        let (ex, ey) = (a * theta.cos(), b * theta.sin());
        let x = cx + scale * (ex * cos_rot - ey * sin_rot);
        let y = cy + scale * (ex * sin_rot + ey * cos_rot);
        vertices.push((x, y));
    }
    rasterize(&vertices, cfg.width, cfg.height)
}

/// Scan-line polygon fill over pixel centers `(col + 0.5, row + 0.5)`
/// with half-open spans, so abutting polygons never double-claim a
/// pixel. Rejects empty, out-of-bounds, and 8-disconnected results.
fn rasterize(vertices: &[(f64, f64)], width: usize, height: usize) -> Option<Candidate> {
    let min_y = vertices.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let max_y = vertices.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let row_lo = (min_y - 0.5).floor().max(0.0) as i64;
    let row_hi = (max_y - 0.5).ceil() as i64;
    let mut pixels = Vec::new();
    let mut crossings = Vec::new();
    let (mut min_row, mut max_row) = (usize::MAX, 0usize);
    let (mut min_col, mut max_col) = (usize::MAX, 0usize);
    for row in row_lo..=row_hi {
        let yc = row as f64 + 0.5;
        crossings.clear();
        for k in 0..vertices.len() {
            let (x1, y1) = vertices[k];
            let (x2, y2) = vertices[(k + 1) % vertices.len()];
            if (y1 <= yc) != (y2 <= yc) {
                let t = (yc - y1) / (y2 - y1);
                crossings.push(x1 + t * (x2 - x1));
            }
        }
        crossings.sort_unstable_by(|p, q| p.partial_cmp(q).unwrap());
        for pair in crossings.chunks_exact(2) {
            let col_lo = (pair[0] - 0.5).ceil() as i64;
            let col_hi = (pair[1] - 0.5).ceil() as i64;
            for col in col_lo..col_hi {
                if row < 0 || col < 0 || row >= height as i64 || col >= width as i64 {
                    return None;
                }
                let (r, c) = (row as usize, col as usize);
                pixels.push(PixelCoord::new(r, c));
                min_row = min_row.min(r);
                max_row = max_row.max(r);
                min_col = min_col.min(c);
                max_col = max_col.max(c);
            }
        }
    }
    if pixels.is_empty() {
        return None;
    }
    let cand = Candidate {
        pixels,
        min_row,
        max_row,
        min_col,
        max_col,
    };
    pixel_set_connected(&cand).then_some(cand)
}

/// True when the candidate's pixels form a single 8-connected region.
fn pixel_set_connected(cand: &Candidate) -> bool {
    let lw = cand.max_col - cand.min_col + 1;
    let lh = cand.max_row - cand.min_row + 1;
    let mut grid = vec![false; lw * lh];
    for p in &cand.pixels {
        grid[(p.row - cand.min_row) * lw + (p.col - cand.min_col)] = true;
    }
    let mut seen = vec![false; lw * lh];
    let start = (cand.pixels[0].row - cand.min_row) * lw + (cand.pixels[0].col - cand.min_col);
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 0usize;
    while let Some(i) = stack.pop() {
        reached += 1;
        let (r, c) = (i / lw, i % lw);
        for &(dr, dc) in Connectivity::Eight.offsets() {
            let (nr, nc) = (r as i64 + dr as i64, c as i64 + dc as i64);
            if nr < 0 || nc < 0 || nr >= lh as i64 || nc >= lw as i64 {
                continue;
            }
            let j = nr as usize * lw + nc as usize;
            if grid[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    reached == cand.pixels.len()
}

/// Placement admission for both overlap modes.
fn admit(cfg: &SynthConfig, labels: &LabelMap, placed: &[Placed], cand: &Candidate) -> bool {
    if cfg.allow_overlap {
        admit_overlap(cfg, labels, placed, cand)
    } else {
        admit_gap(cfg, labels, cand)
    }
}

/// Overlap mode: the candidate takes every contested pixel, but each
/// earlier nucleus must keep at least `1 - max_overlap_fraction` of its
/// original area and stay 8-connected.
fn admit_overlap(
    cfg: &SynthConfig,
    labels: &LabelMap,
    placed: &[Placed],
    cand: &Candidate,
) -> bool {
    let mut loss: std::collections::BTreeMap<u32, usize> = std::collections::BTreeMap::new();
    for p in &cand.pixels {
        let old = labels.get(p.row, p.col);
        if old != 0 {
            *loss.entry(old).or_insert(0) += 1;
        }
    }
    for (&label, &new_loss) in &loss {
        let info = &placed[(label - 1) as usize];
        let total_lost = info.lost + new_loss;
        if total_lost as f64 > cfg.max_overlap_fraction * info.original_area as f64 {
            return false;
        }
        if !remainder_connected(labels, info, label, cand) {
            return false;
        }
    }
    true
}

/// True when `label`'s pixels minus the candidate's stay one nonempty
/// 8-connected region.
fn remainder_connected(labels: &LabelMap, info: &Placed, label: u32, cand: &Candidate) -> bool {
    let lw = info.max_col - info.min_col + 1;
    let lh = info.max_row - info.min_row + 1;
    let mut grid = vec![false; lw * lh];
    let mut remaining = 0usize;
    for row in info.min_row..=info.max_row {
        for col in info.min_col..=info.max_col {
            if labels.get(row, col) == label {
                grid[(row - info.min_row) * lw + (col - info.min_col)] = true;
                remaining += 1;
            }
        }
    }
    for p in &cand.pixels {
        if (info.min_row..=info.max_row).contains(&p.row)
            && (info.min_col..=info.max_col).contains(&p.col)
        {
            let i = (p.row - info.min_row) * lw + (p.col - info.min_col);
            if grid[i] {
                grid[i] = false;
                remaining -= 1;
            }
        }
    }
    if remaining == 0 {
        return false;
    }
    let start = grid.iter().position(|&v| v).unwrap();
    let mut seen = vec![false; lw * lh];
    let mut stack = vec![start];
    seen[start] = true;
    let mut reached = 0usize;
    while let Some(i) = stack.pop() {
        reached += 1;
        let (r, c) = (i / lw, i % lw);
        for &(dr, dc) in Connectivity::Eight.offsets() {
            let (nr, nc) = (r as i64 + dr as i64, c as i64 + dc as i64);
            if nr < 0 || nc < 0 || nr >= lh as i64 || nc >= lw as i64 {
                continue;
            }
            let j = nr as usize * lw + nc as usize;
            if grid[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    reached == remaining
}

/// Gap mode: no pixel sharing, and every candidate pixel keeps Euclidean
/// distance >= min_gap from all previously placed pixels.
fn admit_gap(cfg: &SynthConfig, labels: &LabelMap, cand: &Candidate) -> bool {
    let gap_sq = cfg.min_gap * cfg.min_gap;
    let rad = cfg.min_gap.ceil() as i64;
    let (w, h) = (labels.width() as i64, labels.height() as i64);
    for p in &cand.pixels {
        if labels.get(p.row, p.col) != 0 {
            return false;
        }
        for dr in -rad..=rad {
            for dc in -rad..=rad {
                let (nr, nc) = (p.row as i64 + dr, p.col as i64 + dc);
                if nr < 0 || nc < 0 || nr >= h || nc >= w {
                    continue;
                }
                if labels.get(nr as usize, nc as usize) != 0 {
                    let d_sq = (dr * dr + dc * dc) as f64;
                    if d_sq < gap_sq {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn commit(labels: &mut LabelMap, placed: &mut Vec<Placed>, cand: Candidate, label: u32) {
    for p in &cand.pixels {
        let old = labels.get(p.row, p.col);
        if old != 0 {
            placed[(old - 1) as usize].lost += 1;
        }
        labels.set(p.row, p.col, label);
    }
    placed.push(Placed {
        original_area: cand.pixels.len(),
        lost: 0,
        min_row: cand.min_row,
        max_row: cand.max_row,
        min_col: cand.min_col,
        max_col: cand.max_col,
    });
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub nuclei: u32,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config: SynthConfig,
    pub images: Vec<ManifestEntry>,
}

/// Manifest file name written by [`batch_gen`].
pub const MANIFEST_FILE: &str = "manifest.json";

/// Generate `count` label maps into `out_dir` as 16-bit PNGs plus a
/// JSON manifest. Image `i` uses seed `cfg.seed + i`, so outputs are
/// identical whether images are generated in parallel or serially.
pub fn batch_gen(cfg: &SynthConfig, count: usize, out_dir: &Path) -> Result<Manifest, SynthError> {
    cfg.validate()?;
    if count == 0 {
        return Err(SynthError::InvalidConfig("count must be positive".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| crate::io::IoError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let images = (0..count)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i as u64);
            let sub = SynthConfig {
                seed,
                ..cfg.clone()
            };
            let labels = gen_nuclei_masks(&sub)?;
            let file = format!("mask_{i:05}.png");
            crate::io::write_label_png(&out_dir.join(&file), &labels)?;
            Ok(ManifestEntry {
                file,
                nuclei: labels.labels().len() as u32,
                seed,
            })
        })
        .collect::<Result<Vec<_>, SynthError>>()?;
    let manifest = Manifest {
        config: cfg.clone(),
        images,
    };
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    crate::io::atomic_write_bytes(&out_dir.join(MANIFEST_FILE), &json)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn connected_and_nonempty(labels: &LabelMap) {
        for region in labels.regions() {
            assert!(region.area > 0);
            let mask = crate::raster::BinaryMask::from_fn(labels.width(), labels.height(), |r, c| {
                labels.get(r, c) == region.label
            });
            let parts = crate::raster::connected_components(&mask, Connectivity::Eight);
            assert_eq!(parts.labels().len(), 1, "label {} fragmented", region.label);
        }
    }

    #[test]
    fn zero_count_range_rejected() {
        let cfg = SynthConfig {
            nuclei_count: (0, 3),
            ..SynthConfig::default()
        };
        assert!(matches!(
            gen_nuclei_masks(&cfg),
            Err(SynthError::InvalidConfig(_))
        ));
    }

    #[test]
    fn bad_ranges_rejected() {
        for cfg in [
            SynthConfig {
                radius: (1.0, 10.0),
                ..SynthConfig::default()
            },
            SynthConfig {
                radius: (12.0, 6.0),
                ..SynthConfig::default()
            },
            SynthConfig {
                vertex_count: 5,
                ..SynthConfig::default()
            },
            SynthConfig {
                irregularity: 1.5,
                ..SynthConfig::default()
            },
            SynthConfig {
                max_overlap_fraction: 1.0,
                ..SynthConfig::default()
            },
            SynthConfig {
                min_gap: -0.5,
                ..SynthConfig::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?} should fail validation");
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let cfg = SynthConfig::default();
        let a = gen_nuclei_masks(&cfg).unwrap();
        let b = gen_nuclei_masks(&cfg).unwrap();
        assert_eq!(a, b);
        let c = gen_nuclei_masks(&SynthConfig {
            seed: 1,
            ..cfg
        })
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn smooth_circles_have_disc_area() {
        let cfg = SynthConfig {
            width: 160,
            height: 160,
            nuclei_count: (4, 4),
            radius: (10.0, 10.0),
            irregularity: 0.0,
            vertex_count: 64,
            allow_overlap: false,
            min_gap: 2.0,
            ..SynthConfig::default()
        };
        let expected = std::f64::consts::PI * 100.0;
        for seed in 0..5 {
            let labels = gen_nuclei_masks(&SynthConfig { seed, ..cfg.clone() }).unwrap();
            let regions = labels.regions();
            assert_eq!(regions.len(), 4);
            for region in regions {
                let err = (region.area as f64 - expected).abs() / expected;
                assert!(
                    err < 0.05,
                    "area {} deviates {:.1}% from {expected:.2}",
                    region.area,
                    err * 100.0
                );
            }
        }
    }

    #[test]
    fn exhaustion_reports_progress() {
        let cfg = SynthConfig {
            width: 48,
            height: 48,
            nuclei_count: (5, 5),
            radius: (14.0, 14.0),
            irregularity: 0.0,
            allow_overlap: false,
            min_gap: 40.0,
            ..SynthConfig::default()
        };
        match gen_nuclei_masks(&cfg) {
            Err(SynthError::PlacementExhausted {
                placed, requested, ..
            }) => {
                assert_eq!(requested, 5);
                assert!(placed >= 1, "at least the first nucleus fits");
            }
            other => panic!("expected exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn batch_is_reproducible() {
        let cfg = SynthConfig {
            width: 96,
            height: 96,
            nuclei_count: (3, 6),
            radius: (5.0, 9.0),
            ..SynthConfig::default()
        };
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let ma = batch_gen(&cfg, 3, dir_a.path()).unwrap();
        let mb = batch_gen(&cfg, 3, dir_b.path()).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(ma.images.len(), 3);
        for (i, entry) in ma.images.iter().enumerate() {
            assert_eq!(entry.seed, cfg.seed + i as u64);
            let a = std::fs::read(dir_a.path().join(&entry.file)).unwrap();
            let b = std::fs::read(dir_b.path().join(&entry.file)).unwrap();
            assert_eq!(a, b, "image {i} differs between runs");
        }
        let parsed: Manifest = serde_json::from_slice(
            &std::fs::read(dir_a.path().join(MANIFEST_FILE)).unwrap(),
        )
        .unwrap();
        assert_eq!(parsed, ma);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn labels_stay_connected_under_overlap(seed in 0u64..1000) {
            let cfg = SynthConfig {
                width: 96,
                height: 96,
                nuclei_count: (8, 12),
                radius: (5.0, 12.0),
                irregularity: 0.5,
                allow_overlap: true,
                max_overlap_fraction: 0.4,
                seed,
                ..SynthConfig::default()
            };
            let labels = gen_nuclei_masks(&cfg).unwrap();
            connected_and_nonempty(&labels);
        }

        #[test]
        fn gap_mode_respects_min_gap(seed in 0u64..1000) {
            let cfg = SynthConfig {
                width: 96,
                height: 96,
                nuclei_count: (3, 5),
                radius: (4.0, 7.0),
                allow_overlap: false,
                min_gap: 3.0,
                seed,
                ..SynthConfig::default()
            };
            let labels = gen_nuclei_masks(&cfg).unwrap();
            connected_and_nonempty(&labels);
            let mut pixels: Vec<(i64, i64, u32)> = Vec::new();
            for row in 0..96 {
                for col in 0..96 {
                    let label = labels.get(row, col);
                    if label != 0 {
                        pixels.push((row as i64, col as i64, label));
                    }
                }
            }
            for (i, &(r1, c1, l1)) in pixels.iter().enumerate() {
                for &(r2, c2, l2) in &pixels[i + 1..] {
                    if l1 != l2 {
                        let d_sq = ((r1 - r2).pow(2) + (c1 - c2).pow(2)) as f64;
                        prop_assert!(d_sq >= 9.0, "labels {l1},{l2} at distance^2 {d_sq}");
                    }
                }
            }
        }
    }
}
