//! Classical illuminant estimation in the Minkowski / Gaussian-derivative
//! framework, diagonal (von Kries) correction and scene-mean chromaticity.
//!
//! Every method reduces to
//!
//! ```text
//! e_c = ( Σ_x w(x) · |Dⁿ f_σ,c(x)|^p )^(1/p)
//! ```
//!
//! normalized to unit length, with `p = ∞` taken as a true maximum.

mod filter;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{self, Lab, LinearRgb, WhitePoint};
use crate::image::{ColorSpace, ImageError, ImagePlane};
use crate::numeric::CompensatedSum;
use filter::Kernel;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error("image has no pixels")]
    EmptyImage,
    #[error("every pixel is zero")]
    AllZeroImage,
    #[error("estimate has zero norm")]
    DegenerateEstimate,
    #[error("illuminant channel {channel} is zero")]
    ZeroChannelIlluminant { channel: usize },
    #[error("invalid estimator parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    GrayWorld,
    WhitePatch,
    ShadesOfGray,
    GrayEdge,
    WeightedGrayEdge,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::GrayWorld,
        Method::WhitePatch,
        Method::ShadesOfGray,
        Method::GrayEdge,
        Method::WeightedGrayEdge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::GrayWorld => "gray-world",
            Method::WhitePatch => "white-patch",
            Method::ShadesOfGray => "shades-of-gray",
            Method::GrayEdge => "gray-edge",
            Method::WeightedGrayEdge => "weighted-gray-edge",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}`"))
    }
}

/// Minkowski exponent; `Max` is the `p = ∞` limit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Minkowski {
    P(f64),
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorParams {
    pub method: Method,
    pub order: u32,
    pub minkowski: Minkowski,
    pub sigma: f64,
    /// Edge-weight exponent, used by [`Method::WeightedGrayEdge`] only.
    pub kappa: f64,
}

impl EstimatorParams {
    pub fn gray_world() -> Self {
        EstimatorParams {
            method: Method::GrayWorld,
            order: 0,
            minkowski: Minkowski::P(1.0),
            sigma: 0.0,
            kappa: 0.0,
        }
    }

    pub fn white_patch() -> Self {
        EstimatorParams {
            method: Method::WhitePatch,
            order: 0,
            minkowski: Minkowski::Max,
            sigma: 0.0,
            kappa: 0.0,
        }
    }

    pub fn shades_of_gray(p: f64) -> Self {
        EstimatorParams {
            method: Method::ShadesOfGray,
            order: 0,
            minkowski: Minkowski::P(p),
            sigma: 0.0,
            kappa: 0.0,
        }
    }

    pub fn gray_edge(order: u32, p: f64, sigma: f64) -> Self {
        EstimatorParams {
            method: Method::GrayEdge,
            order,
            minkowski: Minkowski::P(p),
            sigma,
            kappa: 0.0,
        }
    }

    pub fn weighted_gray_edge(order: u32, p: f64, sigma: f64, kappa: f64) -> Self {
        EstimatorParams {
            method: Method::WeightedGrayEdge,
            order,
            minkowski: Minkowski::P(p),
            sigma,
            kappa,
        }
    }

    /// Default parameters per method: Shades of Gray p = 6; edge methods
    /// first order, p = 1, σ = 2; weighted edges κ = 1.
    pub fn default_for(method: Method) -> Self {
        match method {
            Method::GrayWorld => Self::gray_world(),
            Method::WhitePatch => Self::white_patch(),
            Method::ShadesOfGray => Self::shades_of_gray(6.0),
            Method::GrayEdge => Self::gray_edge(1, 1.0, 2.0),
            Method::WeightedGrayEdge => Self::weighted_gray_edge(1, 1.0, 2.0, 1.0),
        }
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        let bad = |m: &str| Err(EstimateError::InvalidParams(m.to_string()));
        if let Minkowski::P(p) = self.minkowski {
            if !(p >= 1.0 && p.is_finite()) {
                return bad("minkowski p must be a finite value >= 1");
            }
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be >= 0");
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return bad("kappa must be >= 0");
        }
        if self.order > 2 {
            return bad("derivative order must be 0, 1 or 2");
        }
        match self.method {
            Method::GrayWorld => {
                if self.order != 0 || self.minkowski != Minkowski::P(1.0) || self.sigma != 0.0 {
                    return bad("gray world requires order 0, p = 1, sigma = 0");
                }
            }
            Method::WhitePatch => {
                if self.order != 0 || self.minkowski != Minkowski::Max || self.sigma != 0.0 {
                    return bad("white patch requires order 0, p = inf, sigma = 0");
                }
            }
            Method::ShadesOfGray => {
                if self.order != 0 {
                    return bad("shades of gray requires order 0");
                }
            }
            Method::GrayEdge | Method::WeightedGrayEdge => {
                if self.order == 0 {
                    return bad("edge methods require order >= 1");
                }
            }
        }
        Ok(())
    }
}

/// Unit-norm RGB direction of the light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IlluminantEstimate {
    pub direction: LinearRgb,
}

impl IlluminantEstimate {
    pub fn neutral() -> Self {
        let v = 1.0 / 3f64.sqrt();
        IlluminantEstimate {
            direction: LinearRgb::splat(v),
        }
    }

    /// Normalizes a non-negative RGB triple to unit length.
    pub fn from_rgb(rgb: LinearRgb) -> Result<Self, EstimateError> {
        let arr = rgb.to_array();
        if arr.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(EstimateError::DegenerateEstimate);
        }
        let n = rgb.norm();
        if n == 0.0 {
            return Err(EstimateError::DegenerateEstimate);
        }
        Ok(IlluminantEstimate {
            direction: rgb.scale(1.0 / n),
        })
    }

    /// Angular distance to another direction, in degrees.
    pub fn angular_error_deg(&self, other: LinearRgb) -> f64 {
        crate::numeric::angle_deg(self.direction.to_array(), other.to_array())
    }
}

/// Per-channel response fields `|Dⁿ f_σ,c|` in row-major order.
fn responses(img: &ImagePlane, order: u32, sigma: f64) -> [Vec<f64>; 3] {
    let (w, h) = (img.width(), img.height());
    let channel = |c: usize| -> Vec<f64> { img.pixels().iter().map(|p| p[c]).collect() };
    let k0 = Kernel::gaussian(sigma, 0);
    let field = |c: usize| -> Vec<f64> {
        let data = channel(c);
        match order {
            0 => {
                if sigma > 0.0 {
                    filter::separable(&data, w, h, &k0, &k0)
                        .into_iter()
                        .map(f64::abs)
                        .collect()
                } else {
                    data.into_iter().map(f64::abs).collect()
                }
            }
            1 => {
                let k1 = Kernel::gaussian(sigma, 1);
                let dx = filter::separable(&data, w, h, &k1, &k0);
                let dy = filter::separable(&data, w, h, &k0, &k1);
                dx.iter().zip(&dy).map(|(a, b)| a.hypot(*b)).collect()
            }
            _ => {
                let k1 = Kernel::gaussian(sigma, 1);
                let k2 = Kernel::gaussian(sigma, 2);
                let dxx = filter::separable(&data, w, h, &k2, &k0);
                let dyy = filter::separable(&data, w, h, &k0, &k2);
                let dxy = filter::separable(&data, w, h, &k1, &k1);
                dxx.iter()
                    .zip(&dyy)
                    .zip(&dxy)
                    .map(|((a, b), c)| (a * a + b * b + 4.0 * c * c).sqrt())
                    .collect()
            }
        }
    };
    let mut out = [field(0), field(1), field(2)];
    if order > 0 {
        // Derivative taps sum to zero only up to rounding; a flat region
        // should read as exactly edgeless rather than as 1e-17 noise.
        let scale = img
            .pixels()
            .iter()
            .flat_map(|p| p.iter().map(|v| v.abs()))
            .fold(0.0, f64::max);
        let floor = scale * 1e-12;
        for f in out.iter_mut() {
            for v in f.iter_mut() {
                if *v <= floor {
                    *v = 0.0;
                }
            }
        }
    }
    out
}

/// Estimates the illuminant direction of a linear-RGB image.
pub fn estimate_illuminant(
    img: &ImagePlane,
    params: &EstimatorParams,
) -> Result<IlluminantEstimate, EstimateError> {
    params.validate()?;
    img.expect_space(ColorSpace::Linear)?;
    if img.is_empty() {
        return Err(EstimateError::EmptyImage);
    }
    if img.pixels().iter().all(|p| p.iter().all(|v| *v == 0.0)) {
        return Err(EstimateError::AllZeroImage);
    }

    let fields = responses(img, params.order, params.sigma);

    let weights: Option<Vec<f64>> = if params.method == Method::WeightedGrayEdge {
        let mag: Vec<f64> = (0..img.len())
            .map(|i| {
                (fields[0][i] * fields[0][i]
                    + fields[1][i] * fields[1][i]
                    + fields[2][i] * fields[2][i])
                    .sqrt()
            })
            .collect();
        let peak = mag.iter().copied().fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(EstimateError::DegenerateEstimate);
        }
        Some(mag.iter().map(|m| (m / peak).powf(params.kappa)).collect())
    } else {
        None
    };
    let weight = |i: usize| weights.as_ref().map_or(1.0, |w| w[i]);

    let mut e = [0.0; 3];
    for (c, field) in fields.iter().enumerate() {
        e[c] = match params.minkowski {
            Minkowski::Max => field
                .iter()
                .enumerate()
                .map(|(i, v)| weight(i) * v)
                .fold(0.0, f64::max),
            Minkowski::P(p) => {
                let peak = field.iter().copied().fold(0.0, f64::max);
                if peak == 0.0 {
                    0.0
                } else {
                    // scaled by the channel peak so large p cannot overflow
                    let mut acc = CompensatedSum::new();
                    for (i, v) in field.iter().enumerate() {
                        acc.add(weight(i) * (v / peak).powf(p));
                    }
                    peak * acc.value().powf(1.0 / p)
                }
            }
        };
    }
    IlluminantEstimate::from_rgb(LinearRgb::from_array(e))
}

/// Divides each channel by `√3 · e_c`, so a pixel equal to the estimate
/// direction becomes achromatic and a neutral estimate is the identity.
pub fn von_kries_correct(
    img: &ImagePlane,
    e: &IlluminantEstimate,
) -> Result<ImagePlane, EstimateError> {
    img.expect_space(ColorSpace::Linear)?;
    let d = e.direction.to_array();
    for (channel, v) in d.iter().enumerate() {
        if *v <= 0.0 {
            return Err(EstimateError::ZeroChannelIlluminant { channel });
        }
    }
    let s3 = 3f64.sqrt();
    let div = [d[0] * s3, d[1] * s3, d[2] * s3];
    let pixels = img
        .pixels()
        .iter()
        .map(|p| [p[0] / div[0], p[1] / div[1], p[2] / div[2]])
        .collect();
    Ok(ImagePlane::new(
        img.width(),
        img.height(),
        ColorSpace::Linear,
        pixels,
    )?)
}

/// CIELAB value of the per-channel mean linear RGB.
pub fn mean_chromaticity(img: &ImagePlane, wp: WhitePoint) -> Result<Lab, EstimateError> {
    img.expect_space(ColorSpace::Linear)?;
    if img.is_empty() {
        return Err(EstimateError::EmptyImage);
    }
    Ok(colorspace::linear_to_lab(mean_rgb(img), wp))
}

pub(crate) fn mean_rgb(img: &ImagePlane) -> LinearRgb {
    let mut acc = [CompensatedSum::new(); 3];
    for p in img.pixels() {
        for c in 0..3 {
            acc[c].add(p[c]);
        }
    }
    let n = img.len() as f64;
    LinearRgb::new(acc[0].value() / n, acc[1].value() / n, acc[2].value() / n)
}
