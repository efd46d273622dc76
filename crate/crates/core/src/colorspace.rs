//! Color-space conversions between sRGB-encoded values, linear RGB, CIE XYZ
//! and CIELAB, plus the CIEDE2000 color difference.
//!
//! The RGB/XYZ matrix is built from the sRGB primaries and the D65 white so
//! that equal-channel inputs land exactly on the achromatic axis.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ColorError {
    #[error("color is out of the RGB gamut: channel {channel} = {value}")]
    OutOfGamut { channel: usize, value: f64 },
    #[error("invalid white point {0:?}: all components must be positive")]
    InvalidWhitePoint([f64; 3]),
}

/// sRGB-encoded channel values normalized to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncodedRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// Linear radiometric RGB. Values above 1 are allowed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LinearRgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

/// CIE 1931 tristimulus values with reference white at `Y = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Xyz {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Lab {
    pub l: f64,
    pub a: f64,
    pub b: f64,
}

/// Reference white tristimulus values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhitePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl WhitePoint {
    /// D65, 2° observer.
    pub const D65: WhitePoint = WhitePoint {
        x: 0.95047,
        y: 1.0,
        z: 1.08883,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Result<Self, ColorError> {
        if [x, y, z].iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(WhitePoint { x, y, z })
        } else {
            Err(ColorError::InvalidWhitePoint([x, y, z]))
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl Default for WhitePoint {
    fn default() -> Self {
        WhitePoint::D65
    }
}

impl EncodedRgb {
    pub fn new(r: f64, g: f64, b: f64) -> Self {
        EncodedRgb { r, g, b }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }
}

impl LinearRgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        LinearRgb { r, g, b }
    }

    pub fn splat(v: f64) -> Self {
        LinearRgb { r: v, g: v, b: v }
    }

    pub fn from_array(c: [f64; 3]) -> Self {
        LinearRgb {
            r: c[0],
            g: c[1],
            b: c[2],
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    pub fn norm(self) -> f64 {
        (self.r * self.r + self.g * self.g + self.b * self.b).sqrt()
    }

    /// Channel-wise product.
    pub fn mul(self, o: LinearRgb) -> LinearRgb {
        LinearRgb::new(self.r * o.r, self.g * o.g, self.b * o.b)
    }

    pub fn scale(self, k: f64) -> LinearRgb {
        LinearRgb::new(self.r * k, self.g * k, self.b * k)
    }

    pub fn max_channel(self) -> f64 {
        self.r.max(self.g).max(self.b)
    }

    pub fn min_channel(self) -> f64 {
        self.r.min(self.g).min(self.b)
    }
}

impl Lab {
    pub const fn new(l: f64, a: f64, b: f64) -> Self {
        Lab { l, a, b }
    }

    pub fn from_array(c: [f64; 3]) -> Self {
        Lab {
            l: c[0],
            a: c[1],
            b: c[2],
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.l, self.a, self.b]
    }

    pub fn is_finite(self) -> bool {
        self.l.is_finite() && self.a.is_finite() && self.b.is_finite()
    }

    /// Euclidean (CIE76) distance.
    pub fn distance(self, o: Lab) -> f64 {
        let (dl, da, db) = (self.l - o.l, self.a - o.a, self.b - o.b);
        (dl * dl + da * da + db * db).sqrt()
    }
}

const SRGB_PRIMARIES: [(f64, f64); 3] = [(0.64, 0.33), (0.30, 0.60), (0.15, 0.06)];
const DECODE_THRESHOLD: f64 = 0.04045;
const ENCODE_THRESHOLD: f64 = DECODE_THRESHOLD / 12.92;
const LAB_EPSILON: f64 = 6.0 / 29.0;

type Mat3 = [[f64; 3]; 3];

struct Matrices {
    rgb_to_xyz: Mat3,
    xyz_to_rgb: Mat3,
}

fn matrices() -> &'static Matrices {
    static M: OnceLock<Matrices> = OnceLock::new();
    M.get_or_init(|| {
        let rgb_to_xyz = primaries_matrix(SRGB_PRIMARIES, WhitePoint::D65);
        let xyz_to_rgb = invert3(&rgb_to_xyz);
        Matrices {
            rgb_to_xyz,
            xyz_to_rgb,
        }
    })
}

/// Builds the RGB→XYZ matrix whose columns are the primaries scaled so
/// that RGB (1,1,1) maps onto `white`.
fn primaries_matrix(primaries: [(f64, f64); 3], white: WhitePoint) -> Mat3 {
    let mut p = [[0.0; 3]; 3];
    for (j, (x, y)) in primaries.iter().enumerate() {
        p[0][j] = x / y;
        p[1][j] = 1.0;
        p[2][j] = (1.0 - x - y) / y;
    }
    let inv = invert3(&p);
    let s = mat_vec(&inv, white.to_array());
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = p[i][j] * s[j];
        }
    }
    m
}

fn invert3(m: &Mat3) -> Mat3 {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    let inv_det = 1.0 / det;
    [
        [
            c00 * inv_det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det,
        ],
        [
            c01 * inv_det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det,
        ],
        [
            c02 * inv_det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det,
        ],
    ]
}

fn mat_vec(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn decode_channel(c: f64) -> f64 {
    if c <= DECODE_THRESHOLD {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn encode_channel(c: f64) -> f64 {
    if c <= ENCODE_THRESHOLD {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

pub fn srgb_to_linear(c: EncodedRgb) -> LinearRgb {
    LinearRgb::new(
        decode_channel(c.r),
        decode_channel(c.g),
        decode_channel(c.b),
    )
}

pub fn linear_to_srgb(c: LinearRgb) -> EncodedRgb {
    EncodedRgb::new(
        encode_channel(c.r),
        encode_channel(c.g),
        encode_channel(c.b),
    )
}

pub fn linear_to_xyz(c: LinearRgb) -> Xyz {
    let [x, y, z] = mat_vec(&matrices().rgb_to_xyz, c.to_array());
    Xyz { x, y, z }
}

pub fn xyz_to_linear(c: Xyz) -> LinearRgb {
    LinearRgb::from_array(mat_vec(&matrices().xyz_to_rgb, [c.x, c.y, c.z]))
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON.powi(3) {
        t.cbrt()
    } else {
        t / (3.0 * LAB_EPSILON * LAB_EPSILON) + 4.0 / 29.0
    }
}

fn lab_f_inv(u: f64) -> f64 {
    if u > LAB_EPSILON {
        u * u * u
    } else {
        3.0 * LAB_EPSILON * LAB_EPSILON * (u - 4.0 / 29.0)
    }
}

pub fn xyz_to_lab(c: Xyz, wp: WhitePoint) -> Lab {
    let fx = lab_f(c.x / wp.x);
    let fy = lab_f(c.y / wp.y);
    let fz = lab_f(c.z / wp.z);
    Lab::new(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))
}

pub fn lab_to_xyz(c: Lab, wp: WhitePoint) -> Xyz {
    let fy = (c.l + 16.0) / 116.0;
    let fx = fy + c.a / 500.0;
    let fz = fy - c.b / 200.0;
    Xyz {
        x: wp.x * lab_f_inv(fx),
        y: wp.y * lab_f_inv(fy),
        z: wp.z * lab_f_inv(fz),
    }
}

pub fn linear_to_lab(c: LinearRgb, wp: WhitePoint) -> Lab {
    xyz_to_lab(linear_to_xyz(c), wp)
}

/// Inverse of [`linear_to_lab`] without any gamut check.
pub fn lab_to_linear_unchecked(c: Lab, wp: WhitePoint) -> LinearRgb {
    xyz_to_linear(lab_to_xyz(c, wp))
}

/// Rounding noise below this magnitude is not treated as a gamut violation.
const GAMUT_SLACK: f64 = 1e-12;

/// Inverse of [`linear_to_lab`]. Fails when a channel comes out negative;
/// callers that want clipping can use [`lab_to_linear_unchecked`].
pub fn lab_to_linear(c: Lab, wp: WhitePoint) -> Result<LinearRgb, ColorError> {
    let rgb = lab_to_linear_unchecked(c, wp).to_array();
    let mut out = [0.0; 3];
    for (channel, (&v, o)) in rgb.iter().zip(out.iter_mut()).enumerate() {
        if v < -GAMUT_SLACK || !v.is_finite() {
            return Err(ColorError::OutOfGamut { channel, value: v });
        }
        *o = v.max(0.0);
    }
    Ok(LinearRgb::from_array(out))
}

/// Distance from the achromatic axis in the a*-b* plane.
pub fn chroma(c: Lab) -> f64 {
    c.a.hypot(c.b)
}

/// CIEDE2000 color difference with unit parametric factors.
pub fn ciede2000(x: Lab, y: Lab) -> f64 {
    use std::f64::consts::PI;
    let deg = PI / 180.0;
    let pow7_25 = 25f64.powi(7);

    let c1 = chroma(x);
    let c2 = chroma(y);
    let c_bar = 0.5 * (c1 + c2);
    let c_bar7 = c_bar.powi(7);
    let g = 0.5 * (1.0 - (c_bar7 / (c_bar7 + pow7_25)).sqrt());

    let a1p = (1.0 + g) * x.a;
    let a2p = (1.0 + g) * y.a;
    let c1p = a1p.hypot(x.b);
    let c2p = a2p.hypot(y.b);

    let hue = |b: f64, ap: f64| -> f64 {
        if b == 0.0 && ap == 0.0 {
            0.0
        } else {
            let h = b.atan2(ap) / deg;
            if h < 0.0 {
                h + 360.0
            } else {
                h
            }
        }
    };
    let h1p = hue(x.b, a1p);
    let h2p = hue(y.b, a2p);

    let dl = y.l - x.l;
    let dc = c2p - c1p;
    let chroma_product = c1p * c2p;
    let dh = if chroma_product == 0.0 {
        0.0
    } else {
        let d = h2p - h1p;
        if d > 180.0 {
            d - 360.0
        } else if d < -180.0 {
            d + 360.0
        } else {
            d
        }
    };
    let d_big_h = 2.0 * chroma_product.sqrt() * (0.5 * dh * deg).sin();

    let l_bar = 0.5 * (x.l + y.l);
    let cp_bar = 0.5 * (c1p + c2p);
    let hp_bar = if chroma_product == 0.0 {
        h1p + h2p
    } else if (h1p - h2p).abs() <= 180.0 {
        0.5 * (h1p + h2p)
    } else if h1p + h2p < 360.0 {
        0.5 * (h1p + h2p + 360.0)
    } else {
        0.5 * (h1p + h2p - 360.0)
    };

    let t = 1.0 - 0.17 * ((hp_bar - 30.0) * deg).cos()
        + 0.24 * ((2.0 * hp_bar) * deg).cos()
        + 0.32 * ((3.0 * hp_bar + 6.0) * deg).cos()
        - 0.20 * ((4.0 * hp_bar - 63.0) * deg).cos();
    let d_theta = 30.0 * (-((hp_bar - 275.0) / 25.0).powi(2)).exp();
    let cp_bar7 = cp_bar.powi(7);
    let r_c = 2.0 * (cp_bar7 / (cp_bar7 + pow7_25)).sqrt();
    let l50 = (l_bar - 50.0).powi(2);
    let s_l = 1.0 + 0.015 * l50 / (20.0 + l50).sqrt();
    let s_c = 1.0 + 0.045 * cp_bar;
    let s_h = 1.0 + 0.015 * cp_bar * t;
    let r_t = -(2.0 * d_theta * deg).sin() * r_c;

    let tl = dl / s_l;
    let tc = dc / s_c;
    let th = d_big_h / s_h;
    (tl * tl + tc * tc + th * th + r_t * tc * th)
        .max(0.0)
        .sqrt()
}
