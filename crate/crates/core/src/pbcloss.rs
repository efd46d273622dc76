//! Perceptual balanced color loss over CIELAB images: mean CIEDE2000, a
//! chroma-weighted squared error on (a, b), and a squared lightness error.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{chroma, ciede2000, Lab};
use crate::image::{ColorSpace, ImageError, ImagePlane};
use crate::numeric::CompensatedSum;

#[derive(Debug, Error)]
pub enum LossError {
    #[error("ShapeMismatch: {0}")]
    ShapeMismatch(#[from] ImageError),
    #[error("empty batch")]
    Empty,
}

/// Chroma at which the weight reaches `1 + β`.
pub const CHROMA_SCALE: f64 = 128.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbcParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for PbcParams {
    fn default() -> Self {
        PbcParams {
            lambda1: 1.0,
            lambda2: 0.5,
            lambda3: 0.2,
            beta: 2.0,
            gamma: 2.0,
        }
    }
}

/// `1 + β (c / 128)^γ`.
pub fn chroma_weight(c_gt: f64, p: &PbcParams) -> f64 {
    1.0 + p.beta * (c_gt / CHROMA_SCALE).powf(p.gamma)
}

/// Per-pixel contributions before averaging.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelLoss {
    pub delta_e: f64,
    /// `ω · (Δa² + Δb²)`
    pub chromatic: f64,
    /// `ΔL²`
    pub lightness: f64,
}

impl PixelLoss {
    pub fn total(&self, p: &PbcParams) -> f64 {
        p.lambda1 * self.delta_e + p.lambda2 * self.chromatic + p.lambda3 * self.lightness
    }
}

pub fn pixel_loss(pred: Lab, gt: Lab, p: &PbcParams) -> PixelLoss {
    let w = chroma_weight(chroma(gt), p);
    let (da, db, dl) = (pred.a - gt.a, pred.b - gt.b, pred.l - gt.l);
    PixelLoss {
        delta_e: ciede2000(pred, gt),
        chromatic: w * (da * da + db * db),
        lightness: dl * dl,
    }
}

fn check(pred: &ImagePlane, gt: &ImagePlane) -> Result<(), LossError> {
    pred.expect_space(ColorSpace::Lab)?;
    gt.expect_space(ColorSpace::Lab)?;
    pred.same_shape(gt)?;
    if pred.is_empty() {
        return Err(LossError::Empty);
    }
    Ok(())
}

/// Per-pixel loss map (each entry already weighted by the λs).
pub fn pbc_loss_map(
    pred: &ImagePlane,
    gt: &ImagePlane,
    p: &PbcParams,
) -> Result<Vec<f64>, LossError> {
    check(pred, gt)?;
    Ok(pred
        .pixels()
        .iter()
        .zip(gt.pixels())
        .map(|(a, b)| pixel_loss(Lab::from_array(*a), Lab::from_array(*b), p).total(p))
        .collect())
}

/// Scalar loss: every term averaged over all pixels, in row-major order.
pub fn pbc_loss(pred: &ImagePlane, gt: &ImagePlane, p: &PbcParams) -> Result<f64, LossError> {
    pbc_loss_batch(&[(pred, gt)], p)
}

/// Loss over a mini-batch; the means run over every pixel of every pair.
pub fn pbc_loss_batch(
    batch: &[(&ImagePlane, &ImagePlane)],
    p: &PbcParams,
) -> Result<f64, LossError> {
    let mut de = CompensatedSum::new();
    let mut ch = CompensatedSum::new();
    let mut li = CompensatedSum::new();
    let mut n = 0usize;
    for (pred, gt) in batch {
        check(pred, gt)?;
        for (a, b) in pred.pixels().iter().zip(gt.pixels()) {
            let px = pixel_loss(Lab::from_array(*a), Lab::from_array(*b), p);
            de.add(px.delta_e);
            ch.add(px.chromatic);
            li.add(px.lightness);
        }
        n += pred.len();
    }
    if n == 0 {
        return Err(LossError::Empty);
    }
    let n = n as f64;
    Ok(p.lambda1 * de.value() / n + p.lambda2 * ch.value() / n + p.lambda3 * li.value() / n)
}

/// Gradient of [`pbc_loss`] with respect to every predicted (L, a, b).
///
/// The chromatic and lightness terms are differentiated analytically. The
/// CIEDE2000 term has no closed-form derivative here and is differentiated
/// per pixel by central differences with step `de_step`.
pub fn pbc_loss_gradient(
    pred: &ImagePlane,
    gt: &ImagePlane,
    p: &PbcParams,
    de_step: f64,
) -> Result<Vec<[f64; 3]>, LossError> {
    check(pred, gt)?;
    let n = pred.len() as f64;
    let grads = pred
        .pixels()
        .iter()
        .zip(gt.pixels())
        .map(|(a, b)| {
            let (pl, gl) = (Lab::from_array(*a), Lab::from_array(*b));
            let w = chroma_weight(chroma(gl), p);
            let mut g = [
                p.lambda3 * 2.0 * (pl.l - gl.l),
                p.lambda2 * 2.0 * w * (pl.a - gl.a),
                p.lambda2 * 2.0 * w * (pl.b - gl.b),
            ];
            if p.lambda1 != 0.0 {
                let de = delta_e_gradient(pl, gl, de_step);
                for c in 0..3 {
                    g[c] += p.lambda1 * de[c];
                }
            }
            g.map(|v| v / n)
        })
        .collect();
    Ok(grads)
}

/// Central-difference gradient of CIEDE2000 with respect to `pred`.
pub fn delta_e_gradient(pred: Lab, gt: Lab, step: f64) -> [f64; 3] {
    let base = pred.to_array();
    let mut g = [0.0; 3];
    for c in 0..3 {
        let mut hi = base;
        let mut lo = base;
        hi[c] += step;
        lo[c] -= step;
        g[c] = (ciede2000(Lab::from_array(hi), gt) - ciede2000(Lab::from_array(lo), gt))
            / (2.0 * step);
    }
    g
}
