//! Structural similarity: mean local SSIM over 11x11 Gaussian windows
//! (sigma 1.5), valid region only, stabilizers C1 = (0.01 L)^2 and
//! C2 = (0.03 L)^2 with dynamic range L = 1.

use super::{check_pair, QualityError};
use crate::raster::GrayImage;

use super::constants::{SSIM_C1 as C1, SSIM_C2 as C2, SSIM_SIGMA as SIGMA, SSIM_WINDOW as WINDOW};

fn gaussian_kernel() -> [f64; WINDOW] {
    let mut k = [0.0; WINDOW];
    let center = (WINDOW / 2) as f64;
    let mut sum = 0.0;
    for (i, v) in k.iter_mut().enumerate() {
        let d = i as f64 - center;
        *v = (-d * d / (2.0 * SIGMA * SIGMA)).exp();
        sum += *v;
    }
    for v in k.iter_mut() {
        *v /= sum;
    }
    k
}

/// Separable valid-mode Gaussian filtering: output is
/// `(width - 10) x (height - 10)`.
fn filter_valid(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let k = gaussian_kernel();
    let out_w = width - WINDOW + 1;
    let out_h = height - WINDOW + 1;
    let mut horiz = vec![0.0; out_w * height];
    for r in 0..height {
        for c in 0..out_w {
            let mut sum = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                sum += kv * data[r * width + c + i];
            }
            horiz[r * out_w + c] = sum;
        }
    }
    let mut out = vec![0.0; out_w * out_h];
    for r in 0..out_h {
        for c in 0..out_w {
            let mut sum = 0.0;
            for (i, &kv) in k.iter().enumerate() {
                sum += kv * horiz[(r + i) * out_w + c];
            }
            out[r * out_w + c] = sum;
        }
    }
    out
}

pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64, QualityError> {
    check_pair(a, b, "ssim", WINDOW)?;
    let (w, h) = (a.width(), a.height());
    let xa = a.data();
    let xb = b.data();
    let sq_a: Vec<f64> = xa.iter().map(|v| v * v).collect();
    let sq_b: Vec<f64> = xb.iter().map(|v| v * v).collect();
    let prod: Vec<f64> = xa.iter().zip(xb).map(|(x, y)| x * y).collect();

    let mu_a = filter_valid(xa, w, h);
    let mu_b = filter_valid(xb, w, h);
    let e_a2 = filter_valid(&sq_a, w, h);
    let e_b2 = filter_valid(&sq_b, w, h);
    let e_ab = filter_valid(&prod, w, h);

    let mut sum = 0.0;
    for i in 0..mu_a.len() {
        let (ma, mb) = (mu_a[i], mu_b[i]);
        let var_a = e_a2[i] - ma * ma;
        let var_b = e_b2[i] - mb * mb;
        let cov = e_ab[i] - ma * mb;
        let num = (2.0 * ma * mb + C1) * (2.0 * cov + C2);
        let den = (ma * ma + mb * mb + C1) * (var_a + var_b + C2);
        sum += num / den;
    }
    Ok(sum / mu_a.len() as f64)
}
