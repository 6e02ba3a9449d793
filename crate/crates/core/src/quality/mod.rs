//! Full-reference image quality metrics: SSIM, GMSD, and FSIM. All
//! three operate on grayscale intensities in `[0, 1]`; color inputs
//! should be converted with [`crate::raster::to_grayscale`] first.
//!
//! Every constant follows the metric's original reference
//! implementation; the handful of places where a convention had to be
//! pinned (padding, downsampling of odd sizes, variance normalization)
//! are documented at the definition site.

mod fsim;
mod gmsd;
mod ssim;

pub use fsim::fsim;
pub use gmsd::gmsd;
pub use ssim::ssim;

/// The fixed metric constants, matching the published reference
/// implementations. Exposed so configuration layers can record and
/// validate them; the metrics themselves are not re-parameterizable.
pub mod constants {
    /// SSIM window side length.
    pub const SSIM_WINDOW: usize = 11;
    /// SSIM Gaussian weighting sigma.
    pub const SSIM_SIGMA: f64 = 1.5;
    /// SSIM luminance stabilizer, (K1 * L)^2 with K1 = 0.01, L = 1.
    pub const SSIM_C1: f64 = 1e-4;
    /// SSIM contrast stabilizer, (K2 * L)^2 with K2 = 0.03, L = 1.
    pub const SSIM_C2: f64 = 9e-4;
    /// GMSD gradient-similarity stabilizer on the [0, 1] scale.
    pub const GMSD_C: f64 = 0.0026;
    /// FSIM phase-congruency similarity stabilizer.
    pub const FSIM_T1: f64 = 0.85;
    /// FSIM gradient similarity stabilizer on the internal [0, 255] scale.
    pub const FSIM_T2: f64 = 160.0;
}

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::GrayImage;

#[derive(Debug, Error)]
pub enum QualityError {
    #[error("image dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
    #[error("minimum dimension {got} is below the required {min} for {metric}")]
    TooSmall {
        metric: &'static str,
        min: usize,
        got: usize,
    },
}

pub(crate) fn check_pair(
    a: &GrayImage,
    b: &GrayImage,
    metric: &'static str,
    min_dim: usize,
) -> Result<(), QualityError> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(QualityError::DimensionMismatch {
            a_width: a.width(),
            a_height: a.height(),
            b_width: b.width(),
            b_height: b.height(),
        });
    }
    let got = a.width().min(a.height());
    if got < min_dim {
        return Err(QualityError::TooSmall {
            metric,
            min: min_dim,
            got,
        });
    }
    Ok(())
}

/// All three metrics for one image pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub ssim: f64,
    pub fsim: f64,
    pub gmsd: f64,
}

pub fn evaluate(a: &GrayImage, b: &GrayImage) -> Result<QualityReport, QualityError> {
    Ok(QualityReport {
        ssim: ssim(a, b)?,
        fsim: fsim(a, b)?,
        gmsd: gmsd(a, b)?,
    })
}

/// 2x2-style block mean downsampling by integer `factor`; blocks at the
/// bottom/right edges of odd-sized images average only the pixels that
/// exist (no zero padding, so inverting intensities commutes with
/// downsampling).
pub(crate) fn block_mean_downsample(
    data: &[f64],
    width: usize,
    height: usize,
    factor: usize,
) -> (Vec<f64>, usize, usize) {
    if factor <= 1 {
        return (data.to_vec(), width, height);
    }
    let out_w = width.div_ceil(factor);
    let out_h = height.div_ceil(factor);
    let mut out = Vec::with_capacity(out_w * out_h);
    for br in 0..out_h {
        for bc in 0..out_w {
            let r0 = br * factor;
            let c0 = bc * factor;
            let r1 = (r0 + factor).min(height);
            let c1 = (c0 + factor).min(width);
            let mut sum = 0.0;
            for r in r0..r1 {
                for c in c0..c1 {
                    sum += data[r * width + c];
                }
            }
            out.push(sum / ((r1 - r0) * (c1 - c0)) as f64);
        }
    }
    (out, out_w, out_h)
}

/// 3x3 correlation with replicate (edge-clamp) padding.
pub(crate) fn correlate3_replicate(
    data: &[f64],
    width: usize,
    height: usize,
    kernel: &[[f64; 3]; 3],
) -> Vec<f64> {
    let mut out = vec![0.0; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut sum = 0.0;
            for (i, krow) in kernel.iter().enumerate() {
                for (j, &k) in krow.iter().enumerate() {
                    let rr = (r as i64 + i as i64 - 1).clamp(0, height as i64 - 1) as usize;
                    let cc = (c as i64 + j as i64 - 1).clamp(0, width as i64 - 1) as usize;
                    sum += k * data[rr * width + cc];
                }
            }
            out[r * width + c] = sum;
        }
    }
    out
}

/// 3x3 correlation with zero padding.
pub(crate) fn correlate3_zero(
    data: &[f64],
    width: usize,
    height: usize,
    kernel: &[[f64; 3]; 3],
) -> Vec<f64> {
    let mut out = vec![0.0; width * height];
    for r in 0..height {
        for c in 0..width {
            let mut sum = 0.0;
            for (i, krow) in kernel.iter().enumerate() {
                for (j, &k) in krow.iter().enumerate() {
                    let rr = r as i64 + i as i64 - 1;
                    let cc = c as i64 + j as i64 - 1;
                    if rr >= 0 && cc >= 0 && rr < height as i64 && cc < width as i64 {
                        sum += k * data[rr as usize * width + cc as usize];
                    }
                }
            }
            out[r * width + c] = sum;
        }
    }
    out
}
