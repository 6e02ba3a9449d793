//! Feature similarity: phase-congruency and gradient similarity pooled
//! over the phase-congruency maximum, following the original reference
//! implementation (4-scale, 4-orientation log-Gabor bank, minimum
//! wavelength 6, scale factor 2, sigma_onf 0.55, Butterworth lowpass
//! cutoff 0.45 order 15, noise threshold k = 2 with the 1.7 empirical
//! divisor, T1 = 0.85, T2 = 160 on the internal [0,255] scale).
//!
//! Pinned conventions beyond the reference: the final phase-congruency
//! division adds the same epsilon (1e-4) used inside the filter bank so
//! constant images yield PC = 0 rather than 0/0, downsampling for large
//! inputs uses partial-block means at odd edges, and an all-zero pooling
//! weight (both images constant) scores 1. FFT filtering is periodic by
//! construction.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{block_mean_downsample, check_pair, correlate3_zero, QualityError};
use crate::raster::GrayImage;

const NSCALE: usize = 4;
const NORIENT: usize = 4;
const MIN_WAVELENGTH: f64 = 6.0;
const MULT: f64 = 2.0;
const SIGMA_ONF: f64 = 0.55;
const D_THETA_ON_SIGMA: f64 = 1.2;
const K_NOISE: f64 = 2.0;
const EPSILON: f64 = 1e-4;
const CUTOFF: f64 = 0.45;
const ORDER: i32 = 15;
use super::constants::{FSIM_T1 as T1, FSIM_T2 as T2};

const SCHARR_X: [[f64; 3]; 3] = [
    [3.0 / 16.0, 0.0, -3.0 / 16.0],
    [10.0 / 16.0, 0.0, -10.0 / 16.0],
    [3.0 / 16.0, 0.0, -3.0 / 16.0],
];
const SCHARR_Y: [[f64; 3]; 3] = [
    [3.0 / 16.0, 10.0 / 16.0, 3.0 / 16.0],
    [0.0, 0.0, 0.0],
    [-3.0 / 16.0, -10.0 / 16.0, -3.0 / 16.0],
];

/// In-place 2D FFT in row-major layout; the inverse matches the
/// 1/(rows*cols) normalization convention of the reference code.
fn fft2(data: &mut [Complex<f64>], width: usize, height: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let row_fft = if inverse {
        planner.plan_fft_inverse(width)
    } else {
        planner.plan_fft_forward(width)
    };
    for r in 0..height {
        row_fft.process(&mut data[r * width..(r + 1) * width]);
    }
    let col_fft = if inverse {
        planner.plan_fft_inverse(height)
    } else {
        planner.plan_fft_forward(height)
    };
    let mut col = vec![Complex::default(); height];
    for c in 0..width {
        for r in 0..height {
            col[r] = data[r * width + c];
        }
        col_fft.process(&mut col);
        for r in 0..height {
            data[r * width + c] = col[r];
        }
    }
    if inverse {
        let scale = 1.0 / (width * height) as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }
}

/// Normalized frequency per FFT bin (unshifted layout): the DC bin is
/// 0, positive frequencies first, then negative.
fn freq_values(n: usize) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|k| {
            if n.is_multiple_of(2) {
                if k < n / 2 {
                    k as f64 / nf
                } else {
                    (k as f64 - nf) / nf
                }
            } else if k <= (n - 1) / 2 {
                k as f64 / (nf - 1.0)
            } else {
                (k as f64 - nf) / (nf - 1.0)
            }
        })
        .collect()
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Phase congruency map of one image.
fn phase_congruency(im: &[f64], width: usize, height: usize) -> Vec<f64> {
    let n = width * height;
    let mut imfft: Vec<Complex<f64>> = im.iter().map(|&v| Complex::new(v, 0.0)).collect();
    fft2(&mut imfft, width, height, false);

    let fx = freq_values(width);
    let fy = freq_values(height);
    let mut radius = vec![0.0f64; n];
    let mut sintheta = vec![0.0f64; n];
    let mut costheta = vec![0.0f64; n];
    let mut lp = vec![0.0f64; n];
    for (r, &fyr) in fy.iter().enumerate() {
        for (c, &fxc) in fx.iter().enumerate() {
            let i = r * width + c;
            let rad = fxc.hypot(fyr);
            lp[i] = 1.0 / (1.0 + (rad / CUTOFF).powi(2 * ORDER));
            radius[i] = rad;
            let theta = (-fyr).atan2(fxc);
            sintheta[i] = theta.sin();
            costheta[i] = theta.cos();
        }
    }
    radius[0] = 1.0;

    let mut log_gabor = Vec::with_capacity(NSCALE);
    for s in 0..NSCALE {
        let fo = 1.0 / (MIN_WAVELENGTH * MULT.powi(s as i32));
        let denom = 2.0 * SIGMA_ONF.ln().powi(2);
        let mut lg: Vec<f64> = (0..n)
            .map(|i| (-((radius[i] / fo).ln().powi(2)) / denom).exp() * lp[i])
            .collect();
        lg[0] = 0.0;
        log_gabor.push(lg);
    }

    let theta_sigma = std::f64::consts::PI / NORIENT as f64 / D_THETA_ON_SIGMA;
    let mut energy_all = vec![0.0f64; n];
    let mut an_all = vec![0.0f64; n];

    for o in 0..NORIENT {
        let angl = o as f64 * std::f64::consts::PI / NORIENT as f64;
        let (sin_a, cos_a) = angl.sin_cos();
        let spread: Vec<f64> = (0..n)
            .map(|i| {
                let ds = sintheta[i] * cos_a - costheta[i] * sin_a;
                let dc = costheta[i] * cos_a + sintheta[i] * sin_a;
                let dtheta = ds.atan2(dc).abs();
                (-dtheta * dtheta / (2.0 * theta_sigma * theta_sigma)).exp()
            })
            .collect();

        let mut sum_e = vec![0.0f64; n];
        let mut sum_o = vec![0.0f64; n];
        let mut sum_an = vec![0.0f64; n];
        let mut eos: Vec<Vec<Complex<f64>>> = Vec::with_capacity(NSCALE);
        let mut ifft_filters: Vec<Vec<f64>> = Vec::with_capacity(NSCALE);
        let mut em_n = 0.0f64;
        for (s, lg) in log_gabor.iter().enumerate() {
            let filt: Vec<f64> = lg.iter().zip(&spread).map(|(a, b)| a * b).collect();
            let mut filt_c: Vec<Complex<f64>> =
                filt.iter().map(|&v| Complex::new(v, 0.0)).collect();
            fft2(&mut filt_c, width, height, true);
            let sqrt_n = (n as f64).sqrt();
            ifft_filters.push(filt_c.iter().map(|v| v.re * sqrt_n).collect());

            let mut eo: Vec<Complex<f64>> =
                imfft.iter().zip(&filt).map(|(v, &f)| v * f).collect();
            fft2(&mut eo, width, height, true);
            for i in 0..n {
                let an = eo[i].norm();
                sum_an[i] += an;
                sum_e[i] += eo[i].re;
                sum_o[i] += eo[i].im;
            }
            if s == 0 {
                em_n = filt.iter().map(|v| v * v).sum();
            }
            eos.push(eo);
        }

        let mut energy = vec![0.0f64; n];
        for i in 0..n {
            let x_energy = (sum_e[i] * sum_e[i] + sum_o[i] * sum_o[i]).sqrt() + EPSILON;
            let mean_e = sum_e[i] / x_energy;
            let mean_o = sum_o[i] / x_energy;
            for eo in &eos {
                let (e, od) = (eo[i].re, eo[i].im);
                energy[i] += e * mean_e + od * mean_o - (e * mean_o - od * mean_e).abs();
            }
        }

        // noise threshold estimated from the smallest-scale response
        let mut e2: Vec<f64> = eos[0].iter().map(|v| v.norm_sqr()).collect();
        let median_e2n = median(&mut e2);
        let mean_e2n = median_e2n / std::f64::consts::LN_2;
        let noise_power = mean_e2n / em_n;
        let mut est_sum_an2 = 0.0;
        for f in &ifft_filters {
            est_sum_an2 += f.iter().map(|v| v * v).sum::<f64>();
        }
        let mut est_sum_aiaj = 0.0;
        for si in 0..NSCALE - 1 {
            for sj in si + 1..NSCALE {
                est_sum_aiaj += ifft_filters[si]
                    .iter()
                    .zip(&ifft_filters[sj])
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            }
        }
        let est_noise_energy2 = 2.0 * noise_power * est_sum_an2 + 4.0 * noise_power * est_sum_aiaj;
        let tau = (est_noise_energy2 / 2.0).sqrt();
        let est_noise_energy = tau * (std::f64::consts::PI / 2.0).sqrt();
        let est_noise_sigma = ((2.0 - std::f64::consts::PI / 2.0) * tau * tau).sqrt();
        let t = (est_noise_energy + K_NOISE * est_noise_sigma) / 1.7;

        for i in 0..n {
            energy_all[i] += (energy[i] - t).max(0.0);
            an_all[i] += sum_an[i];
        }
    }

    (0..n).map(|i| energy_all[i] / (an_all[i] + EPSILON)).collect()
}

fn scharr_magnitude(data: &[f64], width: usize, height: usize) -> Vec<f64> {
    let gx = correlate3_zero(data, width, height, &SCHARR_X);
    let gy = correlate3_zero(data, width, height, &SCHARR_Y);
    gx.iter().zip(&gy).map(|(x, y)| x.hypot(*y)).collect()
}

pub fn fsim(a: &GrayImage, b: &GrayImage) -> Result<f64, QualityError> {
    check_pair(a, b, "fsim", 32)?;
    let (w0, h0) = (a.width(), a.height());
    let to_255 = |img: &GrayImage| -> Vec<f64> { img.data().iter().map(|v| v * 255.0).collect() };
    let factor = ((w0.min(h0) as f64) / 256.0).round().max(1.0) as usize;
    let (ya, w, h) = block_mean_downsample(&to_255(a), w0, h0, factor);
    let (yb, _, _) = block_mean_downsample(&to_255(b), w0, h0, factor);

    let pc1 = phase_congruency(&ya, w, h);
    let pc2 = phase_congruency(&yb, w, h);
    let g1 = scharr_magnitude(&ya, w, h);
    let g2 = scharr_magnitude(&yb, w, h);

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..pc1.len() {
        let pcm = pc1[i].max(pc2[i]);
        let s_pc = (2.0 * pc1[i] * pc2[i] + T1) / (pc1[i] * pc1[i] + pc2[i] * pc2[i] + T1);
        let s_g = (2.0 * g1[i] * g2[i] + T2) / (g1[i] * g1[i] + g2[i] * g2[i] + T2);
        num += s_pc * s_g * pcm;
        den += pcm;
    }
    if den == 0.0 {
        return Ok(1.0);
    }
    Ok(num / den)
}
