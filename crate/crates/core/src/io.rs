//! File formats: PFM float maps, 16-bit PNG label maps, 8-bit PNG
//! previews, and atomic file replacement. All writers go through a
//! temp-file-plus-rename so readers never observe partial output.

use std::io::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use image::{DynamicImage, ImageFormat};
use thiserror::Error;

use crate::raster::{GrayImage, LabelMap, RgbImage};

#[derive(Debug, Error)]
pub enum IoError {
    /// The file could not be opened, created, read, or renamed.
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    /// The file opened fine but its contents are not valid for the
    /// expected format.
    #[error("format error in {path}: {reason}")]
    Format { path: String, reason: String },
    /// A label map contains an instance id too large for 16-bit PNG.
    #[error("label {label} exceeds the 16-bit PNG limit of 65535")]
    LabelOverflow { label: u32 },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    fn format(path: &Path, reason: impl Into<String>) -> Self {
        IoError::Format {
            path: path.display().to_string(),
            reason: reason.into(),
        }
    }

    /// True when the failure happened at the OS level rather than while
    /// interpreting file contents.
    pub fn is_os_failure(&self) -> bool {
        matches!(self, IoError::Io { .. })
    }
}

/// Dense single-channel float grid, row-major, `f32` storage so PFM
/// round-trips are exact.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl FloatMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Option<Self> {
        (data.len() == width * height).then_some(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
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

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.data[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: f32) {
        self.data[row * self.width + col] = value;
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write bytes to `path` atomically: the data lands in a sibling temp
/// file first and is renamed over the target only after a successful
/// write.
pub fn atomic_write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let file_name = path
        .file_name()
        .ok_or_else(|| IoError::io(path, std::io::Error::other("path has no file name")))?;
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp_name = format!(
        ".{}.{}-{}.tmp",
        file_name.to_string_lossy(),
        std::process::id(),
        n
    );
    let tmp_path = match dir {
        Some(d) => d.join(&tmp_name),
        None => std::path::PathBuf::from(&tmp_name),
    };
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp_path)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        Ok(())
    };
    if let Err(e) = write() {
        let _ = std::fs::remove_file(&tmp_path);
        return Err(IoError::io(path, e));
    }
    if let Err(e) = std::fs::rename(&tmp_path, path) {
        let _ = std::fs::remove_file(&tmp_path);
        return Err(IoError::io(path, e));
    }
    Ok(())
}

/// Serialize a float map as grayscale PFM: magic `Pf`, dimensions,
/// scale `-1.0` (little-endian), then rows bottom-up as raw `f32`.
pub fn pfm_bytes(map: &FloatMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + 4 * map.data.len());
    out.extend_from_slice(format!("Pf\n{} {}\n-1.0\n", map.width, map.height).as_bytes());
    for row in (0..map.height).rev() {
        for col in 0..map.width {
            out.extend_from_slice(&map.get(row, col).to_le_bytes());
        }
    }
    out
}

pub fn write_pfm(path: &Path, map: &FloatMap) -> Result<(), IoError> {
    atomic_write_bytes(path, &pfm_bytes(map))
}

pub fn read_pfm(path: &Path) -> Result<FloatMap, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    parse_pfm(&bytes).map_err(|reason| IoError::format(path, reason))
}

fn parse_pfm(bytes: &[u8]) -> Result<FloatMap, String> {
    fn is_space(b: u8) -> bool {
        matches!(b, b' ' | b'\t' | b'\n' | b'\r')
    }
    let mut pos = 0usize;
    let mut token = |bytes: &[u8]| -> Result<String, String> {
        while pos < bytes.len() && is_space(bytes[pos]) {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !is_space(bytes[pos]) {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        std::str::from_utf8(&bytes[start..pos])
            .map(str::to_owned)
            .map_err(|_| "header is not ASCII".into())
    };
    let magic = token(bytes)?;
    if magic != "Pf" {
        return Err(format!("magic is {magic:?}, expected \"Pf\""));
    }
    let width: usize = token(bytes)?
        .parse()
        .map_err(|_| "width is not an integer".to_string())?;
    let height: usize = token(bytes)?
        .parse()
        .map_err(|_| "height is not an integer".to_string())?;
    let scale: f64 = token(bytes)?
        .parse()
        .map_err(|_| "scale is not a number".to_string())?;
    if width == 0 || height == 0 {
        return Err("zero dimension".into());
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err("scale must be a nonzero finite number".into());
    }
    // exactly one whitespace byte separates the header from the samples
    if pos >= bytes.len() || !is_space(bytes[pos]) {
        return Err("missing separator after scale".into());
    }
    pos += 1;
    let expected = width * height * 4;
    let payload = &bytes[pos..];
    if payload.len() != expected {
        return Err(format!(
            "payload is {} bytes, expected {expected}",
            payload.len()
        ));
    }
    let little_endian = scale < 0.0;
    let mut data = vec![0.0f32; width * height];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let raw: [u8; 4] = chunk.try_into().unwrap();
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        // rows are stored bottom-up
        let src_row = i / width;
        let col = i % width;
        let row = height - 1 - src_row;
        data[row * width + col] = v;
    }
    Ok(FloatMap {
        width,
        height,
        data,
    })
}

fn png_bytes(img: DynamicImage) -> Vec<u8> {
    let mut cursor = std::io::Cursor::new(Vec::new());
    img.write_to(&mut cursor, ImageFormat::Png)
        .expect("in-memory PNG encode");
    cursor.into_inner()
}

/// Encode a label map as 16-bit grayscale PNG. Fails if any label does
/// not fit in 16 bits.
pub fn label_png_bytes(labels: &LabelMap) -> Result<Vec<u8>, IoError> {
    let mut buf: image::ImageBuffer<image::Luma<u16>, Vec<u16>> =
        image::ImageBuffer::new(labels.width() as u32, labels.height() as u32);
    for row in 0..labels.height() {
        for col in 0..labels.width() {
            let label = labels.get(row, col);
            let v = u16::try_from(label).map_err(|_| IoError::LabelOverflow { label })?;
            buf.put_pixel(col as u32, row as u32, image::Luma([v]));
        }
    }
    Ok(png_bytes(DynamicImage::ImageLuma16(buf)))
}

pub fn write_label_png(path: &Path, labels: &LabelMap) -> Result<(), IoError> {
    atomic_write_bytes(path, &label_png_bytes(labels)?)
}

pub fn read_label_png(path: &Path) -> Result<LabelMap, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let img = image::load_from_memory(&bytes)
        .map_err(|e| IoError::format(path, format!("PNG decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data: Vec<u32> = match img {
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| u32::from(p.0[0])).collect(),
        DynamicImage::ImageLuma8(buf) => buf.pixels().map(|p| u32::from(p.0[0])).collect(),
        other => {
            return Err(IoError::format(
                path,
                format!(
                    "label maps must be single-channel PNG, got {:?}",
                    other.color()
                ),
            ))
        }
    };
    Ok(LabelMap::new(w, h, data).expect("decoded dimensions are consistent"))
}

fn quantize_u8(value: f64, scale: f64) -> u8 {
    (value * scale + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Encode an intensity image as 8-bit grayscale PNG with
/// `round(v * 255)` quantization.
pub fn gray_png_bytes(img: &GrayImage) -> Vec<u8> {
    let buf: image::GrayImage = image::ImageBuffer::from_fn(
        img.width() as u32,
        img.height() as u32,
        |x, y| image::Luma([quantize_u8(img.get(y as usize, x as usize), 255.0)]),
    );
    png_bytes(DynamicImage::ImageLuma8(buf))
}

pub fn write_gray_png(path: &Path, img: &GrayImage) -> Result<(), IoError> {
    atomic_write_bytes(path, &gray_png_bytes(img))
}

/// Preview encoding for maps valued in `[0, 1]`: `round(v * 255)`.
pub fn unit_map_png_bytes(map: &FloatMap) -> Vec<u8> {
    let buf: image::GrayImage = image::ImageBuffer::from_fn(
        map.width() as u32,
        map.height() as u32,
        |x, y| image::Luma([quantize_u8(map.get(y as usize, x as usize) as f64, 255.0)]),
    );
    png_bytes(DynamicImage::ImageLuma8(buf))
}

pub fn write_unit_map_png(path: &Path, map: &FloatMap) -> Result<(), IoError> {
    atomic_write_bytes(path, &unit_map_png_bytes(map))
}

/// Preview encoding for maps valued in `[0, 2]` (skeleton maps):
/// `round(v * 127.5)`, so the top value 2.0 maps to 255.
pub fn skeleton_png_bytes(map: &FloatMap) -> Vec<u8> {
    let buf: image::GrayImage = image::ImageBuffer::from_fn(
        map.width() as u32,
        map.height() as u32,
        |x, y| image::Luma([quantize_u8(map.get(y as usize, x as usize) as f64, 127.5)]),
    );
    png_bytes(DynamicImage::ImageLuma8(buf))
}

pub fn write_skeleton_png(path: &Path, map: &FloatMap) -> Result<(), IoError> {
    atomic_write_bytes(path, &skeleton_png_bytes(map))
}

/// Encode a binary mask as 8-bit PNG, foreground white.
pub fn mask_png_bytes(mask: &crate::raster::BinaryMask) -> Vec<u8> {
    let buf: image::GrayImage = image::ImageBuffer::from_fn(
        mask.width() as u32,
        mask.height() as u32,
        |x, y| image::Luma([if mask.get(y as usize, x as usize) { 255 } else { 0 }]),
    );
    png_bytes(DynamicImage::ImageLuma8(buf))
}

pub fn write_mask_png(path: &Path, mask: &crate::raster::BinaryMask) -> Result<(), IoError> {
    atomic_write_bytes(path, &mask_png_bytes(mask))
}

/// Load a PNG as an intensity image in `[0, 1]`. Grayscale files use
/// their luma channel directly (8-bit scaled by 255, 16-bit by 65535);
/// color files are converted with Rec. 601 weights.
pub fn read_gray_png(path: &Path) -> Result<GrayImage, IoError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::io(path, e))?;
    let img = image::load_from_memory(&bytes)
        .map_err(|e| IoError::format(path, format!("PNG decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let gray = match img {
        DynamicImage::ImageLuma8(buf) => {
            let data = buf.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect();
            GrayImage::new(w, h, data).expect("8-bit luma is in range")
        }
        DynamicImage::ImageLuma16(buf) => {
            let data = buf.pixels().map(|p| f64::from(p.0[0]) / 65535.0).collect();
            GrayImage::new(w, h, data).expect("16-bit luma is in range")
        }
        DynamicImage::ImageLumaA8(buf) => {
            let data = buf.pixels().map(|p| f64::from(p.0[0]) / 255.0).collect();
            GrayImage::new(w, h, data).expect("8-bit luma is in range")
        }
        other => {
            let rgb8 = other.to_rgb8();
            let mut data = Vec::with_capacity(3 * w * h);
            for p in rgb8.pixels() {
                data.push(f64::from(p.0[0]) / 255.0);
                data.push(f64::from(p.0[1]) / 255.0);
                data.push(f64::from(p.0[2]) / 255.0);
            }
            let rgb = RgbImage::new(w, h, data).expect("8-bit rgb is in range");
            crate::raster::to_grayscale(&rgb)
        }
    };
    Ok(gray)
}
