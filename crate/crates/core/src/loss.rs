//! Contour regularization losses and their analytic gradients, plus the
//! adversarial scalar terms, total-loss assembly, a demonstration
//! gradient-descent optimizer, and a contour contrast probe.
//!
//! Definitions, with `Δ = g_at - g_q` and the sums running over the
//! 8-neighborhood of each contour pixel `at`:
//! - smoothness penalizes intensity jumps between adjacent contour
//!   pixels:  s1 summand = 2 / (1 + exp(-Δ²/λ²)) - 1
//! - sharpness penalizes intensity similarity between a contour pixel
//!   and its non-contour neighbors, nearer neighbors weighted more:
//!   s2 summand = exp(-Δ²/(2λ²)) / dist
//! - both losses are means over the contour set; the total objective is
//!   l1 + l2 + ls1 + β·ls2.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::FloatMap;
use crate::raster::{ContourSet, GrayImage, Neighborhood, PixelCoord};

#[derive(Debug, Error)]
pub enum LossError {
    #[error("pixel ({},{}) is not in the contour set", at.row, at.col)]
    NotAContourPixel { at: PixelCoord },
    #[error("contour set is empty")]
    EmptyContourSet,
    #[error("discriminator score {value} is outside [0,1]")]
    ScoreOutOfRange { value: f64 },
    #[error("invalid loss parameters: {0}")]
    InvalidParams(String),
}

/// Scale and weighting of the contour losses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossParams {
    /// Contrast scale λ on the [0,1] intensity range.
    pub lambda: f64,
    /// Weight β of the sharpness loss in the total.
    pub beta: f64,
    pub neighborhood: Neighborhood,
}

impl LossParams {
    pub fn new(lambda: f64, beta: f64) -> Result<Self, LossError> {
        if !lambda.is_finite() || lambda <= 0.0 {
            return Err(LossError::InvalidParams(format!(
                "lambda must be a positive real, got {lambda}"
            )));
        }
        if !beta.is_finite() || beta < 0.0 {
            return Err(LossError::InvalidParams(format!(
                "beta must be a nonnegative real, got {beta}"
            )));
        }
        Ok(Self {
            lambda,
            beta,
            neighborhood: Neighborhood::eight(),
        })
    }
}

/// All loss components for one image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l1: f64,
    pub l2: f64,
    pub ls1: f64,
    pub ls2: f64,
    pub total: f64,
}

/// JSON report shape: the breakdown plus the parameters it was computed
/// under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l1: f64,
    pub l2: f64,
    pub ls1: f64,
    pub ls2: f64,
    pub beta: f64,
    pub lambda: f64,
    pub total: f64,
}

impl LossReport {
    pub fn new(breakdown: LossBreakdown, params: LossParams) -> Self {
        Self {
            l1: breakdown.l1,
            l2: breakdown.l2,
            ls1: breakdown.ls1,
            ls2: breakdown.ls2,
            beta: params.beta,
            lambda: params.lambda,
            total: breakdown.total,
        }
    }
}

/// A discriminator's scalar output, clamped 1e-7 away from {0, 1} so
/// the log terms stay finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminatorScore {
    value: f64,
}

impl DiscriminatorScore {
    pub const MARGIN: f64 = 1e-7;

    pub fn new(value: f64) -> Result<Self, LossError> {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(LossError::ScoreOutOfRange { value });
        }
        Ok(Self {
            value: value.clamp(Self::MARGIN, 1.0 - Self::MARGIN),
        })
    }

    pub fn value(self) -> f64 {
        self.value
    }
}

/// Smoothness summand as a function of the intensity difference.
fn f1(delta: f64, lambda: f64) -> f64 {
    2.0 / (1.0 + (-delta * delta / (lambda * lambda)).exp()) - 1.0
}

/// d f1 / d delta.
fn f1_prime(delta: f64, lambda: f64) -> f64 {
    let l2 = lambda * lambda;
    let u = (-delta * delta / l2).exp();
    4.0 * delta * u / (l2 * (1.0 + u) * (1.0 + u))
}

/// Sharpness summand (before the 1/dist weight).
fn f2(delta: f64, lambda: f64) -> f64 {
    (-delta * delta / (2.0 * lambda * lambda)).exp()
}

/// d f2 / d delta.
fn f2_prime(delta: f64, lambda: f64) -> f64 {
    -(delta / (lambda * lambda)) * f2(delta, lambda)
}

/// Smoothness contribution of one contour pixel: sum over its
/// 8-neighbors that are also contour pixels.
pub fn s1_term(
    g: &GrayImage,
    c: &ContourSet,
    at: PixelCoord,
    params: &LossParams,
) -> Result<f64, LossError> {
    if !c.contains(at) {
        return Err(LossError::NotAContourPixel { at });
    }
    let (w, h) = (g.width(), g.height());
    let mut sum = 0.0;
    for &d in params.neighborhood.offsets() {
        if let Some(q) = at.offset(d, h, w) {
            if c.contains(q) {
                sum += f1(g.at(at) - g.at(q), params.lambda);
            }
        }
    }
    Ok(sum)
}

/// Sharpness contribution of one contour pixel: sum over its in-bounds
/// 8-neighbors that are not contour pixels, each weighted by the
/// reciprocal distance between pixel centers.
pub fn s2_term(
    g: &GrayImage,
    c: &ContourSet,
    at: PixelCoord,
    params: &LossParams,
) -> Result<f64, LossError> {
    if !c.contains(at) {
        return Err(LossError::NotAContourPixel { at });
    }
    let (w, h) = (g.width(), g.height());
    let mut sum = 0.0;
    for &d in params.neighborhood.offsets() {
        if let Some(q) = at.offset(d, h, w) {
            if !c.contains(q) {
                sum += f2(g.at(at) - g.at(q), params.lambda) / Neighborhood::center_distance(d);
            }
        }
    }
    Ok(sum)
}

/// Mean s1 term over the contour set.
pub fn smoothness_loss(
    g: &GrayImage,
    c: &ContourSet,
    params: &LossParams,
) -> Result<f64, LossError> {
    if c.is_empty() {
        return Err(LossError::EmptyContourSet);
    }
    let mut sum = 0.0;
    for &(at, _) in c.entries() {
        sum += s1_term(g, c, at, params)?;
    }
    Ok(sum / c.len() as f64)
}

/// Mean s2 term over the contour set.
pub fn sharpness_loss(
    g: &GrayImage,
    c: &ContourSet,
    params: &LossParams,
) -> Result<f64, LossError> {
    if c.is_empty() {
        return Err(LossError::EmptyContourSet);
    }
    let mut sum = 0.0;
    for &(at, _) in c.entries() {
        sum += s2_term(g, c, at, params)?;
    }
    Ok(sum / c.len() as f64)
}

/// The adversarial scalars: `(-log d_real, -log(1 - d_fake))`.
pub fn adversarial_terms(d_real: DiscriminatorScore, d_fake: DiscriminatorScore) -> (f64, f64) {
    (-d_real.value().ln(), -(1.0 - d_fake.value()).ln())
}

/// Assemble the total objective `l1 + l2 + ls1 + β·ls2`.
pub fn total_loss(l1: f64, l2: f64, ls1: f64, ls2: f64, params: &LossParams) -> LossBreakdown {
    LossBreakdown {
        l1,
        l2,
        ls1,
        ls2,
        total: l1 + l2 + ls1 + params.beta * ls2,
    }
}

/// Both regularizers in one sweep.
fn regularizers(g: &GrayImage, c: &ContourSet, params: &LossParams) -> (f64, f64) {
    let (w, h) = (g.width(), g.height());
    let (mut s1_sum, mut s2_sum) = (0.0, 0.0);
    for &(at, _) in c.entries() {
        for &d in params.neighborhood.offsets() {
            if let Some(q) = at.offset(d, h, w) {
                let delta = g.at(at) - g.at(q);
                if c.contains(q) {
                    s1_sum += f1(delta, params.lambda);
                } else {
                    s2_sum += f2(delta, params.lambda) / Neighborhood::center_distance(d);
                }
            }
        }
    }
    let n = c.len() as f64;
    (s1_sum / n, s2_sum / n)
}

/// Analytic gradient of `L_s1 + β·L_s2` with respect to every pixel
/// intensity, accumulated in f64 in a fixed order.
///
/// Each contour pixel's s1 sum visits ordered pairs, so an unordered
/// contour pair contributes twice to the loss; both contributions are
/// accumulated here. The s2 summand depends on the non-contour
/// neighbor's intensity too, so its gradient flows to both pixels.
fn gradient_f64(g: &GrayImage, c: &ContourSet, params: &LossParams) -> Vec<f64> {
    let (w, h) = (g.width(), g.height());
    let n = c.len() as f64;
    let mut grad = vec![0.0f64; w * h];
    for &(at, _) in c.entries() {
        for &d in params.neighborhood.offsets() {
            if let Some(q) = at.offset(d, h, w) {
                let delta = g.at(at) - g.at(q);
                let w_pair = if c.contains(q) {
                    f1_prime(delta, params.lambda) / n
                } else {
                    params.beta * f2_prime(delta, params.lambda)
                        / (Neighborhood::center_distance(d) * n)
                };
                grad[at.row * w + at.col] += w_pair;
                grad[q.row * w + q.col] -= w_pair;
            }
        }
    }
    grad
}

/// Gradient of the regularizer objective as a float map.
pub fn loss_gradient(
    g: &GrayImage,
    c: &ContourSet,
    params: &LossParams,
) -> Result<FloatMap, LossError> {
    if c.is_empty() {
        return Err(LossError::EmptyContourSet);
    }
    let grad = gradient_f64(g, c, params);
    let w = g.width();
    Ok(FloatMap::from_fn(w, g.height(), |r, col| {
        grad[r * w + col] as f32
    }))
}

/// Largest number of step halvings the line search tries per iteration.
pub const MAX_HALVINGS: usize = 20;

/// Gradient descent on `L_s1 + β·L_s2` with backtracking halving and
/// `[0,1]` clamping. The trace holds the regularizer breakdown before
/// the first step and after each accepted one (adversarial fields 0),
/// and is non-increasing in `total` by construction. Descent stops
/// early when a step no longer changes the image or no step length is
/// accepted.
pub fn optimize_patch(
    g0: &GrayImage,
    c: &ContourSet,
    params: &LossParams,
    step: f64,
    iters: usize,
) -> Result<(GrayImage, Vec<LossBreakdown>), LossError> {
    if c.is_empty() {
        return Err(LossError::EmptyContourSet);
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(LossError::InvalidParams(format!(
            "step must be a positive real, got {step}"
        )));
    }
    if iters == 0 {
        return Err(LossError::InvalidParams("iters must be positive".into()));
    }
    let mut g = g0.clone();
    let (ls1, ls2) = regularizers(&g, c, params);
    let mut current = total_loss(0.0, 0.0, ls1, ls2, params);
    let mut trace = vec![current];
    for _ in 0..iters {
        let grad = gradient_f64(&g, c, params);
        let mut accepted = None;
        let mut s = step;
        for _ in 0..=MAX_HALVINGS {
            let cand = descend(&g, &grad, s);
            let (ls1, ls2) = regularizers(&cand, c, params);
            let cand_loss = total_loss(0.0, 0.0, ls1, ls2, params);
            if cand_loss.total <= current.total {
                accepted = Some((cand, cand_loss));
                break;
            }
            s *= 0.5;
        }
        let Some((cand, cand_loss)) = accepted else {
            break;
        };
        if cand == g {
            break;
        }
        g = cand;
        current = cand_loss;
        trace.push(current);
    }
    Ok((g, trace))
}

fn descend(g: &GrayImage, grad: &[f64], step: f64) -> GrayImage {
    let w = g.width();
    GrayImage::from_fn(w, g.height(), |r, c| {
        (g.get(r, c) - step * grad[r * w + c]).clamp(0.0, 1.0)
    })
}

/// Mean absolute intensity differences across and along the contour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    /// Mean |Δg| over (contour, non-contour 8-neighbor) pairs.
    pub cross: f64,
    /// Mean |Δg| over (contour, contour 8-neighbor) pairs.
    pub along: f64,
}

pub fn contrast_report(g: &GrayImage, c: &ContourSet) -> Result<ContrastReport, LossError> {
    if c.is_empty() {
        return Err(LossError::EmptyContourSet);
    }
    let (w, h) = (g.width(), g.height());
    let (mut cross_sum, mut along_sum) = (0.0, 0.0);
    let (mut cross_n, mut along_n) = (0usize, 0usize);
    for &(at, _) in c.entries() {
        for &d in Neighborhood::eight().offsets() {
            if let Some(q) = at.offset(d, h, w) {
                let diff = (g.at(at) - g.at(q)).abs();
                if c.contains(q) {
                    along_sum += diff;
                    along_n += 1;
                } else {
                    cross_sum += diff;
                    cross_n += 1;
                }
            }
        }
    }
    Ok(ContrastReport {
        cross: if cross_n == 0 { 0.0 } else { cross_sum / cross_n as f64 },
        along: if along_n == 0 { 0.0 } else { along_sum / along_n as f64 },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn params(lambda: f64, beta: f64) -> LossParams {
        LossParams::new(lambda, beta).unwrap()
    }

    fn contour(pixels: &[(usize, usize)]) -> ContourSet {
        ContourSet::from_entries(
            pixels
                .iter()
                .map(|&(r, c)| (PixelCoord::new(r, c), 1))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn s1_reference_values() {
        let p = params(0.1, 1.0);
        // isolated contour pixel
        let g = GrayImage::constant(3, 3, 0.5);
        let c = contour(&[(1, 1)]);
        assert_eq!(s1_term(&g, &c, PixelCoord::new(1, 1), &p).unwrap(), 0.0);

        // identical-intensity contour neighbor
        let c2 = contour(&[(1, 1), (1, 2)]);
        assert_eq!(s1_term(&g, &c2, PixelCoord::new(1, 1), &p).unwrap(), 0.0);

        // |delta| = lambda
        let g3 = GrayImage::from_fn(2, 1, |_, col| 0.3 + 0.1 * col as f64);
        let c3 = contour(&[(0, 0), (0, 1)]);
        assert_relative_eq!(
            s1_term(&g3, &c3, PixelCoord::new(0, 0), &p).unwrap(),
            0.46211715726000974,
            max_relative = 1e-12
        );
    }

    #[test]
    fn s1_requires_contour_membership() {
        let g = GrayImage::constant(3, 3, 0.5);
        let c = contour(&[(1, 1)]);
        assert!(matches!(
            s1_term(&g, &c, PixelCoord::new(0, 0), &params(0.1, 1.0)),
            Err(LossError::NotAContourPixel { .. })
        ));
    }

    #[test]
    fn s2_reference_values() {
        let p = params(0.1, 1.0);
        // single axis neighbor, identical intensity
        let g = GrayImage::constant(2, 1, 0.5);
        let c = contour(&[(0, 0)]);
        assert_relative_eq!(
            s2_term(&g, &c, PixelCoord::new(0, 0), &p).unwrap(),
            1.0,
            max_relative = 1e-12
        );

        // single diagonal neighbor, identical intensity
        let g2 = GrayImage::constant(2, 2, 0.5);
        let c2 = contour(&[(0, 0), (0, 1), (1, 0)]);
        assert_relative_eq!(
            s2_term(&g2, &c2, PixelCoord::new(0, 0), &p).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            max_relative = 1e-12
        );

        // single axis neighbor with |delta| = lambda*sqrt(2)
        let g3 = GrayImage::from_fn(2, 1, |_, col| {
            0.3 + 0.1 * std::f64::consts::SQRT_2 * col as f64
        });
        assert_relative_eq!(
            s2_term(&g3, &c, PixelCoord::new(0, 0), &p).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn smoothness_reference_values() {
        let p = params(0.1, 1.0);
        let uniform = GrayImage::constant(4, 4, 0.7);
        let c = contour(&[(1, 1), (1, 2), (2, 3)]);
        assert_eq!(smoothness_loss(&uniform, &c, &p).unwrap(), 0.0);

        // two adjacent contour pixels differing by lambda
        let g = GrayImage::from_fn(2, 1, |_, col| 0.3 + 0.1 * col as f64);
        let c2 = contour(&[(0, 0), (0, 1)]);
        assert_relative_eq!(
            smoothness_loss(&g, &c2, &p).unwrap(),
            0.46211715726000974,
            max_relative = 1e-12
        );

        // mutually non-adjacent contour pixels
        let g3 = GrayImage::from_fn(5, 5, |r, c| ((r * 5 + c) as f64) / 24.0);
        let c3 = contour(&[(0, 0), (0, 3), (4, 1)]);
        assert_eq!(smoothness_loss(&g3, &c3, &p).unwrap(), 0.0);

        assert!(matches!(
            smoothness_loss(&uniform, &ContourSet::from_entries(vec![]).unwrap(), &p),
            Err(LossError::EmptyContourSet)
        ));
    }

    #[test]
    fn sharpness_reference_values() {
        let p = params(0.1, 1.0);
        // one contour pixel, 8 identical non-contour neighbors
        let g = GrayImage::constant(3, 3, 0.5);
        let c = contour(&[(1, 1)]);
        assert_relative_eq!(
            sharpness_loss(&g, &c, &p).unwrap(),
            6.82842712474619,
            max_relative = 1e-12
        );

        // neighbors 100*lambda away are invisible
        let p2 = params(0.005, 1.0);
        let g2 = GrayImage::from_fn(3, 3, |r, c| if r == 1 && c == 1 { 0.0 } else { 0.5 });
        assert!(sharpness_loss(&g2, &c, &p2).unwrap() < 8.0 * 1e-8);

        // contour pixel fully surrounded by contour pixels
        let ring: Vec<(usize, usize)> = (0..3)
            .flat_map(|r| (0..3).map(move |c| (r, c)))
            .collect();
        let c3 = contour(&ring);
        assert_eq!(s2_term(&g, &c3, PixelCoord::new(1, 1), &p).unwrap(), 0.0);
    }

    #[test]
    fn adversarial_reference_values() {
        let half = DiscriminatorScore::new(0.5).unwrap();
        let (l1, _) = adversarial_terms(half, half);
        assert_relative_eq!(l1, std::f64::consts::LN_2, max_relative = 1e-12);

        let near_one = DiscriminatorScore::new(1.0).unwrap();
        let near_zero = DiscriminatorScore::new(0.0).unwrap();
        let (l1, l2) = adversarial_terms(near_one, near_zero);
        assert!((0.0..1e-6).contains(&l1));
        assert!((0.0..1e-6).contains(&l2));

        assert!(DiscriminatorScore::new(-0.1).is_err());
        assert!(DiscriminatorScore::new(1.1).is_err());
        assert!(DiscriminatorScore::new(f64::NAN).is_err());
    }

    #[test]
    fn total_loss_assembly() {
        let p = params(0.1, 2.0);
        let b = total_loss(0.1, 0.2, 0.3, 0.4, &p);
        assert_relative_eq!(b.total, 1.4, max_relative = 1e-12);

        let zero = total_loss(0.0, 0.0, 0.0, 0.0, &p);
        assert_eq!(zero.total, 0.0);

        let no_beta = total_loss(0.1, 0.2, 0.3, 123.0, &params(0.1, 0.0));
        assert_relative_eq!(no_beta.total, 0.6, max_relative = 1e-12);
    }

    fn pseudo_image(w: usize, h: usize, seed: u64) -> GrayImage {
        GrayImage::from_fn(w, h, |r, c| {
            let x = seed
                .wrapping_mul(0x9e3779b97f4a7c15)
                .wrapping_add(((r * w + c) as u64).wrapping_mul(0xd1342543de82ef95));
            let unit = ((x >> 11) as f64) / ((1u64 << 53) as f64);
            0.01 + 0.98 * unit
        })
    }

    fn pseudo_contour(w: usize, h: usize, seed: u64) -> ContourSet {
        let mut entries = Vec::new();
        for r in 0..h {
            for c in 0..w {
                let x = seed
                    .wrapping_mul(0xbf58476d1ce4e5b9)
                    .wrapping_add(((r * w + c) as u64).wrapping_mul(0x94d049bb133111eb));
                if (x >> 40).is_multiple_of(4) {
                    entries.push((PixelCoord::new(r, c), 1 + (x % 3) as u32));
                }
            }
        }
        if entries.is_empty() {
            entries.push((PixelCoord::new(h / 2, w / 2), 1));
        }
        ContourSet::from_entries(entries).unwrap()
    }

    fn fd_gradient(g: &GrayImage, c: &ContourSet, p: &LossParams, h_step: f64) -> Vec<f64> {
        let (w, h) = (g.width(), g.height());
        let objective = |img: &GrayImage| {
            smoothness_loss(img, c, p).unwrap() + p.beta * sharpness_loss(img, c, p).unwrap()
        };
        let mut fd = vec![0.0; w * h];
        for i in 0..w * h {
            let mut plus = g.data().to_vec();
            plus[i] += h_step;
            let mut minus = g.data().to_vec();
            minus[i] -= h_step;
            let gp = GrayImage::new(w, h, plus).unwrap();
            let gm = GrayImage::new(w, h, minus).unwrap();
            fd[i] = (objective(&gp) - objective(&gm)) / (2.0 * h_step);
        }
        fd
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = params(0.1, 1.0);
        for seed in 0..4u64 {
            let g = pseudo_image(8, 8, seed);
            let c = pseudo_contour(8, 8, seed + 100);
            let analytic = gradient_f64(&g, &c, &p);
            let fd = fd_gradient(&g, &c, &p, 1e-4);
            for i in 0..analytic.len() {
                let denom = analytic[i].abs().max(fd[i].abs()).max(1e-2);
                let rel = (analytic[i] - fd[i]).abs() / denom;
                assert!(
                    rel < 1e-4,
                    "seed {seed} pixel {i}: analytic {} vs fd {}",
                    analytic[i],
                    fd[i]
                );
            }
        }
    }

    #[test]
    fn gradient_zero_away_from_contour() {
        let p = params(0.1, 1.0);
        let g = pseudo_image(9, 9, 5);
        let c = contour(&[(1, 1), (1, 2)]);
        let grad = loss_gradient(&g, &c, &p).unwrap();
        // (7,7) is neither in c nor adjacent to it
        assert_eq!(grad.get(7, 7), 0.0);
        // uniform image: s1 gradient vanishes, s2 still pulls
        let uniform = GrayImage::constant(9, 9, 0.5);
        let grad_s1_only = loss_gradient(&uniform, &c, &params(0.1, 0.0)).unwrap();
        assert!(grad_s1_only.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn optimizer_stationary_at_zero_loss() {
        // uniform image with beta = 0: smoothness is exactly zero
        let p = params(0.1, 0.0);
        let g = GrayImage::constant(6, 6, 0.4);
        let c = contour(&[(2, 2), (2, 3), (3, 2)]);
        let (out, trace) = optimize_patch(&g, &c, &p, 0.5, 50).unwrap();
        assert_eq!(out, g);
        assert_eq!(trace.len(), 1);
        assert_eq!(trace[0].total, 0.0);
    }

    #[test]
    fn optimizer_trace_monotone() {
        let p = params(0.1, 1.0);
        let g = pseudo_image(12, 12, 9);
        let c = pseudo_contour(12, 12, 17);
        let (_, trace) = optimize_patch(&g, &c, &p, 0.25, 40).unwrap();
        assert!(trace.len() <= 41);
        for w in trace.windows(2) {
            assert!(w[1].total <= w[0].total);
        }
        for b in &trace {
            assert_eq!(b.l1, 0.0);
            assert_eq!(b.l2, 0.0);
            assert_relative_eq!(b.total, b.ls1 + p.beta * b.ls2, max_relative = 1e-12);
        }
    }

    #[test]
    fn contrast_report_fixtures() {
        // uniform image
        let g = GrayImage::constant(4, 4, 0.5);
        let c = contour(&[(0, 3), (1, 3), (2, 3), (3, 3)]);
        let r = contrast_report(&g, &c).unwrap();
        assert_eq!((r.cross, r.along), (0.0, 0.0));

        // step image, bright rightmost column owns the contour
        let step = GrayImage::from_fn(4, 4, |_, col| if col == 3 { 1.0 } else { 0.0 });
        let r2 = contrast_report(&step, &c).unwrap();
        assert_eq!(r2.cross, 1.0);
        assert_eq!(r2.along, 0.0);

        // entry order of the contour set does not matter
        let c_rev = ContourSet::from_entries(vec![
            (PixelCoord::new(3, 3), 1),
            (PixelCoord::new(0, 3), 1),
            (PixelCoord::new(2, 3), 1),
            (PixelCoord::new(1, 3), 1),
        ])
        .unwrap();
        assert_eq!(contrast_report(&step, &c_rev).unwrap(), r2);
    }

    #[test]
    fn params_validation() {
        assert!(LossParams::new(0.0, 1.0).is_err());
        assert!(LossParams::new(-0.1, 1.0).is_err());
        assert!(LossParams::new(f64::NAN, 1.0).is_err());
        assert!(LossParams::new(0.1, -1.0).is_err());
        assert!(LossParams::new(0.1, f64::INFINITY).is_err());
        assert!(LossParams::new(0.1, 0.0).is_ok());
    }

    proptest! {
        #[test]
        fn summand_bounds(delta in -1.0f64..1.0, lambda in 0.01f64..2.0) {
            // the open mathematical bounds saturate in floats once
            // delta/lambda grows past the exp underflow point
            let v1 = f1(delta, lambda);
            prop_assert!((0.0..=1.0).contains(&v1));
            let v2 = f2(delta, lambda);
            prop_assert!((0.0..=1.0).contains(&v2));
            if delta.abs() <= 5.0 * lambda {
                prop_assert!(v1 < 1.0);
                prop_assert!(v2 > 0.0);
            }
        }

        #[test]
        fn summand_symmetry(delta in 0.0f64..1.0, lambda in 0.01f64..2.0) {
            prop_assert_eq!(f1(delta, lambda), f1(-delta, lambda));
            prop_assert_eq!(f2(delta, lambda), f2(-delta, lambda));
        }

        #[test]
        fn summand_monotonicity(a in 0.0f64..0.99, extra in 1e-6f64..0.5, lambda in 0.05f64..1.0) {
            let b = a + extra;
            prop_assert!(f1(b, lambda) >= f1(a, lambda));
            prop_assert!(f2(b, lambda) <= f2(a, lambda));
            // strictness holds until the tails saturate
            if b <= 4.0 * lambda {
                prop_assert!(f1(b, lambda) > f1(a, lambda));
                prop_assert!(f2(b, lambda) < f2(a, lambda));
            }
        }

        #[test]
        fn lambda_scaling_invariance(delta in -0.5f64..0.5, lambda in 0.05f64..1.0, scale in 0.1f64..3.0) {
            let lhs = f1(delta * scale, lambda * scale);
            let rhs = f1(delta, lambda);
            prop_assert!((lhs - rhs).abs() < 1e-12);
            let lhs2 = f2(delta * scale, lambda * scale);
            let rhs2 = f2(delta, lambda);
            prop_assert!((lhs2 - rhs2).abs() < 1e-12);
        }

        #[test]
        fn losses_in_stated_ranges(seed in 0u64..300) {
            let p = params(0.1, 1.0);
            let g = pseudo_image(10, 10, seed);
            let c = pseudo_contour(10, 10, seed ^ 0xabcd);
            let ls1 = smoothness_loss(&g, &c, &p).unwrap();
            let ls2 = sharpness_loss(&g, &c, &p).unwrap();
            prop_assert!((0.0..8.0).contains(&ls1));
            prop_assert!((0.0..=4.0 + 4.0 / std::f64::consts::SQRT_2).contains(&ls2));
        }

        #[test]
        fn global_shift_leaves_losses_unchanged(seed in 0u64..100, shift in 0.0f64..0.2) {
            let p = params(0.1, 1.0);
            let base = GrayImage::from_fn(8, 8, |r, c| {
                let x = seed.wrapping_mul(0x2545f4914f6cdd1d)
                    .wrapping_add(((r * 8 + c) as u64).wrapping_mul(0x9e3779b97f4a7c15));
                0.1 + 0.6 * (((x >> 11) as f64) / ((1u64 << 53) as f64))
            });
            let shifted = GrayImage::new(
                8,
                8,
                base.data().iter().map(|v| v + shift).collect(),
            ).unwrap();
            let c = pseudo_contour(8, 8, seed ^ 0x77);
            let p_ref = &p;
            let ls = |img: &GrayImage| {
                (
                    smoothness_loss(img, &c, p_ref).unwrap(),
                    sharpness_loss(img, &c, p_ref).unwrap(),
                )
            };
            let (a1, a2) = ls(&base);
            let (b1, b2) = ls(&shifted);
            prop_assert!((a1 - b1).abs() < 1e-9);
            prop_assert!((a2 - b2).abs() < 1e-9);
            let ga = gradient_f64(&base, &c, p_ref);
            let gb = gradient_f64(&shifted, &c, p_ref);
            for i in 0..ga.len() {
                prop_assert!((ga[i] - gb[i]).abs() < 1e-9);
            }
        }
    }
}
