//! Grid primitives shared by every other module: intensity images, binary
//! masks, instance label maps, pixel coordinates, contour sets, and the
//! basic morphology/connectivity operations on them.
//!
//! Conventions used throughout the crate:
//! - grids are row-major, `(row, col)` indexing, `row 0` at the top;
//! - out-of-bounds neighbors count as background for erosion and contour
//!   extraction;
//! - nuclei are 8-connected regions, contours are defined against
//!   4-adjacency (the standard duality that keeps contours closed and
//!   one pixel thick).

use thiserror::Error;

/// Square root of two, the center distance of diagonal neighbors.
pub const SQRT_2: f64 = std::f64::consts::SQRT_2;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("data length {got} does not match {width}x{height} = {}", width * height)]
    BadLength {
        width: usize,
        height: usize,
        got: usize,
    },
    #[error("value {value} at index {index} is not finite or outside [0,1]")]
    BadValue { index: usize, value: f64 },
    #[error("entries {a:?} and {b:?} are duplicate contour coordinates")]
    DuplicateContourEntry { a: PixelCoord, b: PixelCoord },
}

/// Pixel connectivity used by morphology and component labeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

impl Connectivity {
    /// Neighbor offsets as `(d_row, d_col)`, fixed order.
    pub fn offsets(self) -> &'static [(i32, i32)] {
        match self {
            Connectivity::Four => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Connectivity::Eight => &[
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }
}

/// A pixel position, `(row, col)` with row 0 at the top.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PixelCoord {
    pub row: usize,
    pub col: usize,
}

impl PixelCoord {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// The neighbor at `(d_row, d_col)`, or `None` if it leaves the
    /// `height` x `width` grid.
    pub fn offset(self, d: (i32, i32), height: usize, width: usize) -> Option<PixelCoord> {
        let r = self.row as i64 + d.0 as i64;
        let c = self.col as i64 + d.1 as i64;
        if r < 0 || c < 0 || r >= height as i64 || c >= width as i64 {
            None
        } else {
            Some(PixelCoord::new(r as usize, c as usize))
        }
    }
}

/// The eight nearest neighboring system used by the contour losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighborhood {
    offsets: [(i32, i32); 8],
}

impl Neighborhood {
    /// The 8-neighborhood: the four axis offsets plus the four diagonals.
    pub fn eight() -> Self {
        Self {
            offsets: [
                (-1, -1),
                (-1, 0),
                (-1, 1),
                (0, -1),
                (0, 1),
                (1, -1),
                (1, 0),
                (1, 1),
            ],
        }
    }

    pub fn offsets(&self) -> &[(i32, i32); 8] {
        &self.offsets
    }

    /// Euclidean distance between pixel centers for one offset:
    /// 1 for axis neighbors, sqrt(2) for diagonals.
    pub fn center_distance(d: (i32, i32)) -> f64 {
        if d.0 != 0 && d.1 != 0 {
            SQRT_2
        } else {
            1.0
        }
    }
}

impl Default for Neighborhood {
    fn default() -> Self {
        Self::eight()
    }
}

/// Single-channel intensity image with values in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::BadLength {
                width,
                height,
                got: data.len(),
            });
        }
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(RasterError::BadValue { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col).clamp(0.0, 1.0));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    pub fn at(&self, p: PixelCoord) -> f64 {
        self.get(p.row, p.col)
    }
}

/// Three-channel image with values in `[0, 1]`, interleaved RGB, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self, RasterError> {
        if data.len() != 3 * width * height {
            return Err(RasterError::BadLength {
                width,
                height,
                got: data.len(),
            });
        }
        for (index, &value) in data.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(RasterError::BadValue { index, value });
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// `(r, g, b)` at a pixel.
    pub fn get(&self, row: usize, col: usize) -> (f64, f64, f64) {
        let i = 3 * (row * self.width + col);
        (self.data[i], self.data[i + 1], self.data[i + 2])
    }
}

/// Per-pixel boolean mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::BadLength {
                width,
                height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: bool) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.data[row * self.width + col] = value;
    }

    pub fn count_foreground(&self) -> usize {
        self.data.iter().filter(|&&v| v).count()
    }
}

/// Per-pixel nucleus instance identifiers; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    width: usize,
    height: usize,
    data: Vec<u32>,
}

/// Bounding box and area of one labeled instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub label: u32,
    pub min_row: usize,
    pub max_row: usize,
    pub min_col: usize,
    pub max_col: usize,
    pub area: usize,
}

impl LabelMap {
    pub fn new(width: usize, height: usize, data: Vec<u32>) -> Result<Self, RasterError> {
        if data.len() != width * height {
            return Err(RasterError::BadLength {
                width,
                height,
                got: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, label: u32) {
        self.data[row * self.width + col] = label;
    }

    pub fn is_empty(&self) -> bool {
        self.data.iter().all(|&v| v == 0)
    }

    /// Foreground mask (any positive label).
    pub fn to_mask(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| v != 0).collect(),
        }
    }

    /// Bounding box and area per label, sorted by label.
    pub fn regions(&self) -> Vec<Region> {
        let mut by_label: std::collections::BTreeMap<u32, Region> = std::collections::BTreeMap::new();
        for row in 0..self.height {
            for col in 0..self.width {
                let label = self.get(row, col);
                if label == 0 {
                    continue;
                }
                by_label
                    .entry(label)
                    .and_modify(|r| {
                        r.min_row = r.min_row.min(row);
                        r.max_row = r.max_row.max(row);
                        r.min_col = r.min_col.min(col);
                        r.max_col = r.max_col.max(col);
                        r.area += 1;
                    })
                    .or_insert(Region {
                        label,
                        min_row: row,
                        max_row: row,
                        min_col: col,
                        max_col: col,
                        area: 1,
                    });
            }
        }
        by_label.into_values().collect()
    }

    /// Distinct positive labels in ascending order.
    pub fn labels(&self) -> Vec<u32> {
        let mut labels: Vec<u32> = self.data.iter().copied().filter(|&v| v != 0).collect();
        labels.sort_unstable();
        labels.dedup();
        labels
    }
}

/// Ordered set of contour pixels with their owning labels, the set `c`
/// of the contour losses. Entries are kept in raster-scan order, which
/// also makes membership queries a binary search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContourSet {
    entries: Vec<(PixelCoord, u32)>,
}

impl ContourSet {
    /// Build from explicit entries. Sorts into raster order and rejects
    /// duplicate coordinates.
    pub fn from_entries(mut entries: Vec<(PixelCoord, u32)>) -> Result<Self, RasterError> {
        entries.sort_unstable_by_key(|(p, _)| *p);
        for w in entries.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(RasterError::DuplicateContourEntry {
                    a: w[0].0,
                    b: w[1].0,
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(PixelCoord, u32)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, p: PixelCoord) -> bool {
        self.entries
            .binary_search_by_key(&p, |(c, _)| *c)
            .is_ok()
    }
}

/// Rec. 601 luma conversion: `0.299 R + 0.587 G + 0.114 B`.
pub fn to_grayscale(img: &RgbImage) -> GrayImage {
    let mut data = Vec::with_capacity(img.width() * img.height());
    for row in 0..img.height() {
        for col in 0..img.width() {
            let (r, g, b) = img.get(row, col);
            let y = 0.299 * r + 0.587 * g + 0.114 * b;
            data.push(y.clamp(0.0, 1.0));
        }
    }
    GrayImage {
        width: img.width(),
        height: img.height(),
        data,
    }
}

/// One-pixel morphological erosion: a pixel survives iff it and all of
/// its `conn`-neighbors are foreground. Out-of-bounds neighbors count as
/// background.
pub fn erode_once(mask: &BinaryMask, conn: Connectivity) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut out = BinaryMask::filled(w, h, false);
    for row in 0..h {
        for col in 0..w {
            if !mask.get(row, col) {
                continue;
            }
            let p = PixelCoord::new(row, col);
            let survives = conn.offsets().iter().all(|&d| {
                p.offset(d, h, w)
                    .map(|q| mask.get(q.row, q.col))
                    .unwrap_or(false)
            });
            out.set(row, col, survives);
        }
    }
    out
}

/// Label maximal `conn`-connected foreground regions 1..K in raster-scan
/// order of each region's first pixel.
pub fn connected_components(mask: &BinaryMask, conn: Connectivity) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = LabelMap::zeros(w, h);
    let mut next = 1u32;
    let mut queue = std::collections::VecDeque::new();
    for row in 0..h {
        for col in 0..w {
            if !mask.get(row, col) || labels.get(row, col) != 0 {
                continue;
            }
            labels.set(row, col, next);
            queue.push_back(PixelCoord::new(row, col));
            while let Some(p) = queue.pop_front() {
                for &d in conn.offsets() {
                    if let Some(q) = p.offset(d, h, w) {
                        if mask.get(q.row, q.col) && labels.get(q.row, q.col) == 0 {
                            labels.set(q.row, q.col, next);
                            queue.push_back(q);
                        }
                    }
                }
            }
            next += 1;
        }
    }
    labels
}

/// A foreground pixel is a contour pixel iff at least one of its
/// 4-neighbors is background, out of bounds, or carries a different
/// positive label. Boundaries between touching nuclei therefore count
/// as contour on both sides.
pub fn extract_contours(labels: &LabelMap) -> ContourSet {
    let (w, h) = (labels.width(), labels.height());
    let mut entries = Vec::new();
    for row in 0..h {
        for col in 0..w {
            let label = labels.get(row, col);
            if label == 0 {
                continue;
            }
            let p = PixelCoord::new(row, col);
            let boundary = Connectivity::Four.offsets().iter().any(|&d| {
                p.offset(d, h, w)
                    .map(|q| labels.get(q.row, q.col) != label)
                    .unwrap_or(true)
            });
            if boundary {
                entries.push((p, label));
            }
        }
    }
    // raster-scan order is already sorted and duplicate-free
    ContourSet { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_label(n: usize) -> LabelMap {
        LabelMap::from_fn(n, n, |_, _| 1)
    }

    #[test]
    fn grayscale_black_white_red() {
        let black = RgbImage::new(2, 2, vec![0.0; 12]).unwrap();
        assert!(to_grayscale(&black).data().iter().all(|&v| v == 0.0));

        let white = RgbImage::new(2, 2, vec![1.0; 12]).unwrap();
        assert!(to_grayscale(&white)
            .data()
            .iter()
            .all(|&v| (v - 1.0).abs() < 1e-12));

        let red = RgbImage::new(1, 1, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((to_grayscale(&red).get(0, 0) - 0.299).abs() < 1e-12);
    }

    #[test]
    fn grayscale_equals_channel_when_gray() {
        for &v in &[0.0, 0.125, 0.5, 0.875, 1.0] {
            let img = RgbImage::new(1, 1, vec![v, v, v]).unwrap();
            assert!((to_grayscale(&img).get(0, 0) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn erode_empty_stays_empty() {
        let mask = BinaryMask::filled(4, 4, false);
        assert_eq!(erode_once(&mask, Connectivity::Four).count_foreground(), 0);
        assert_eq!(erode_once(&mask, Connectivity::Eight).count_foreground(), 0);
    }

    #[test]
    fn erode_3x3_square_leaves_center() {
        let mask = BinaryMask::filled(3, 3, true);
        let eroded = erode_once(&mask, Connectivity::Four);
        assert_eq!(eroded.count_foreground(), 1);
        assert!(eroded.get(1, 1));
    }

    #[test]
    fn erode_isolated_pixel_vanishes() {
        let mask = BinaryMask::from_fn(1, 1, |_, _| true);
        assert_eq!(erode_once(&mask, Connectivity::Four).count_foreground(), 0);
    }

    #[test]
    fn erode_never_adds_foreground() {
        let mask = BinaryMask::from_fn(8, 8, |r, c| (r * 31 + c * 17) % 3 != 0);
        for conn in [Connectivity::Four, Connectivity::Eight] {
            let once = erode_once(&mask, conn);
            for i in 0..once.data().len() {
                assert!(!once.data()[i] || mask.data()[i]);
            }
            let twice = erode_once(&once, conn);
            for i in 0..twice.data().len() {
                assert!(!twice.data()[i] || once.data()[i]);
            }
        }
    }

    #[test]
    fn components_empty_and_full() {
        let empty = BinaryMask::filled(3, 3, false);
        assert!(connected_components(&empty, Connectivity::Four).is_empty());

        let full = BinaryMask::filled(3, 3, true);
        let labels = connected_components(&full, Connectivity::Four);
        assert_eq!(labels.labels(), vec![1]);
    }

    #[test]
    fn components_diagonal_connectivity() {
        let mask = BinaryMask::from_fn(2, 2, |r, c| r == c);
        let eight = connected_components(&mask, Connectivity::Eight);
        assert_eq!(eight.labels(), vec![1]);
        let four = connected_components(&mask, Connectivity::Four);
        assert_eq!(four.labels(), vec![1, 2]);
    }

    #[test]
    fn components_idempotent_partition() {
        let mask = BinaryMask::from_fn(10, 10, |r, c| (r * 7 + c * 13) % 4 != 0);
        let first = connected_components(&mask, Connectivity::Eight);
        let second = connected_components(&first.to_mask(), Connectivity::Eight);
        assert_eq!(first, second);
    }

    #[test]
    fn contours_single_pixel() {
        let labels = LabelMap::from_fn(3, 3, |r, c| u32::from(r == 1 && c == 1));
        let contours = extract_contours(&labels);
        assert_eq!(contours.entries(), &[(PixelCoord::new(1, 1), 1)]);
    }

    #[test]
    fn contours_3x3_square_border() {
        let contours = extract_contours(&square_label(3));
        assert_eq!(contours.len(), 8);
        assert!(!contours.contains(PixelCoord::new(1, 1)));
    }

    #[test]
    fn contours_touching_nuclei_all_boundary() {
        // two 2x2 nuclei sharing a vertical edge
        let labels = LabelMap::from_fn(4, 2, |_, c| if c < 2 { 1 } else { 2 });
        let contours = extract_contours(&labels);
        assert_eq!(contours.len(), 8);
    }

    #[test]
    fn contours_lie_in_foreground() {
        let labels = LabelMap::from_fn(9, 9, |r, c| {
            if (3..6).contains(&r) && (2..7).contains(&c) {
                1
            } else if r < 2 && c < 2 {
                2
            } else {
                0
            }
        });
        let contours = extract_contours(&labels);
        for &(p, label) in contours.entries() {
            assert_eq!(labels.get(p.row, p.col), label);
        }
        // removing contour pixels leaves only pixels with all 4-neighbors same label
        for row in 0..9 {
            for col in 0..9 {
                let label = labels.get(row, col);
                if label == 0 || contours.contains(PixelCoord::new(row, col)) {
                    continue;
                }
                let p = PixelCoord::new(row, col);
                for &d in Connectivity::Four.offsets() {
                    let q = p.offset(d, 9, 9).expect("interior pixel");
                    assert_eq!(labels.get(q.row, q.col), label);
                }
            }
        }
    }

    #[test]
    fn contour_set_rejects_duplicates() {
        let entries = vec![
            (PixelCoord::new(0, 0), 1),
            (PixelCoord::new(0, 0), 2),
        ];
        assert!(ContourSet::from_entries(entries).is_err());
    }
}
