//! Gradient magnitude similarity deviation: the population standard
//! deviation of the per-pixel gradient-magnitude similarity map,
//! computed on 2x block-mean-downsampled inputs with Prewitt gradients.
//!
//! Pinned conventions: odd-sized edges downsample by partial-block
//! means, and the Prewitt correlation uses replicate padding. Both keep
//! gradient magnitudes invariant under intensity inversion, so
//! `gmsd(x, 1-x) = 0` holds at every image size.

use super::{block_mean_downsample, check_pair, correlate3_replicate, QualityError};
use crate::raster::GrayImage;

/// Stabilizer on the `[0,1]` intensity scale.
use super::constants::GMSD_C as C;

const PREWITT_X: [[f64; 3]; 3] = [
    [1.0 / 3.0, 0.0, -1.0 / 3.0],
    [1.0 / 3.0, 0.0, -1.0 / 3.0],
    [1.0 / 3.0, 0.0, -1.0 / 3.0],
];
const PREWITT_Y: [[f64; 3]; 3] = [
    [1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0],
    [0.0, 0.0, 0.0],
    [-1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0],
];

fn gradient_magnitude(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let gx = correlate3_replicate(data, width, height, &PREWITT_X);
    let gy = correlate3_replicate(data, width, height, &PREWITT_Y);
    gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect()
}

pub fn gmsd(a: &GrayImage, b: &GrayImage) -> Result<f64, QualityError> {
    check_pair(a, b, "gmsd", 3)?;
    let (da, w, h) = block_mean_downsample(a.data(), a.width(), a.height(), 2);
    let (db, _, _) = block_mean_downsample(b.data(), b.width(), b.height(), 2);
    let ma = gradient_magnitude(&da, w, h);
    let mb = gradient_magnitude(&db, w, h);
    let gms: Vec<f64> = ma
        .iter()
        .zip(&mb)
        .map(|(x, y)| (2.0 * x * y + C) / (x * x + y * y + C))
        .collect();
    let n = gms.len() as f64;
    let mean = gms.iter().sum::<f64>() / n;
    let var = gms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}
