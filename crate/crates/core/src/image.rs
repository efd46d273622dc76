//! Pixel grids with a color-space tag, label images, and PNG / PPM I/O.

use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{self, EncodedRgb, Lab, LinearRgb, WhitePoint};

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{width}x{height} image needs {expected} pixels, got {got}")]
    ShapeMismatch {
        width: usize,
        height: usize,
        expected: usize,
        got: usize,
    },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("expected a {expected:?} image, got {got:?}")]
    WrongSpace {
        expected: ColorSpace,
        got: ColorSpace,
    },
    #[error("empty image")]
    Empty,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Codec { path: PathBuf, message: String },
    #[error("label {label} does not fit in an 8-bit mask")]
    LabelOverflow { label: u32 },
}

/// How the channel triplets of an [`ImagePlane`] are to be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColorSpace {
    /// sRGB-encoded values in `[0, 1]`.
    Srgb,
    /// Linear RGB.
    Linear,
    /// CIELAB (L, a, b).
    Lab,
}

impl std::str::FromStr for ColorSpace {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "srgb" => Ok(ColorSpace::Srgb),
            "linear" => Ok(ColorSpace::Linear),
            "lab" => Ok(ColorSpace::Lab),
            other => Err(format!("unknown color space `{other}`")),
        }
    }
}

/// Row-major grid of channel triplets.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    space: ColorSpace,
    pixels: Vec<[f64; 3]>,
}

impl ImagePlane {
    pub fn new(
        width: usize,
        height: usize,
        space: ColorSpace,
        pixels: Vec<[f64; 3]>,
    ) -> Result<Self, ImageError> {
        if pixels.len() != width * height {
            return Err(ImageError::ShapeMismatch {
                width,
                height,
                expected: width * height,
                got: pixels.len(),
            });
        }
        Ok(ImagePlane {
            width,
            height,
            space,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, space: ColorSpace, value: [f64; 3]) -> Self {
        ImagePlane {
            width,
            height,
            space,
            pixels: vec![value; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn space(&self) -> ColorSpace {
        self.space
    }

    pub fn pixels(&self) -> &[[f64; 3]] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [[f64; 3]] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<[f64; 3]> {
        self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [f64; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn same_shape(&self, other: &ImagePlane) -> Result<(), ImageError> {
        if self.width != other.width || self.height != other.height {
            return Err(ImageError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    pub fn expect_space(&self, expected: ColorSpace) -> Result<(), ImageError> {
        if self.space != expected {
            return Err(ImageError::WrongSpace {
                expected,
                got: self.space,
            });
        }
        Ok(())
    }

    /// Multiplies every channel value by `k`.
    pub fn scaled(&self, k: f64) -> ImagePlane {
        let pixels = self
            .pixels
            .iter()
            .map(|p| [p[0] * k, p[1] * k, p[2] * k])
            .collect();
        ImagePlane {
            width: self.width,
            height: self.height,
            space: self.space,
            pixels,
        }
    }

    /// Converts to linear RGB. Lab inputs are converted with `wp`.
    pub fn to_linear(&self, wp: WhitePoint) -> ImagePlane {
        let pixels = match self.space {
            ColorSpace::Linear => self.pixels.clone(),
            ColorSpace::Srgb => self
                .pixels
                .iter()
                .map(|p| colorspace::srgb_to_linear(EncodedRgb::new(p[0], p[1], p[2])).to_array())
                .collect(),
            ColorSpace::Lab => self
                .pixels
                .iter()
                .map(|p| colorspace::lab_to_linear_unchecked(Lab::from_array(*p), wp).to_array())
                .collect(),
        };
        ImagePlane {
            width: self.width,
            height: self.height,
            space: ColorSpace::Linear,
            pixels,
        }
    }

    pub fn to_lab(&self, wp: WhitePoint) -> ImagePlane {
        if self.space == ColorSpace::Lab {
            return self.clone();
        }
        let lin = self.to_linear(wp);
        let pixels = lin
            .pixels
            .iter()
            .map(|p| colorspace::linear_to_lab(LinearRgb::from_array(*p), wp).to_array())
            .collect();
        ImagePlane {
            width: self.width,
            height: self.height,
            space: ColorSpace::Lab,
            pixels,
        }
    }

    pub fn to_srgb(&self, wp: WhitePoint) -> ImagePlane {
        if self.space == ColorSpace::Srgb {
            return self.clone();
        }
        let lin = self.to_linear(wp);
        let pixels = lin
            .pixels
            .iter()
            .map(|p| colorspace::linear_to_srgb(LinearRgb::from_array(*p)).to_array())
            .collect();
        ImagePlane {
            width: self.width,
            height: self.height,
            space: ColorSpace::Srgb,
            pixels,
        }
    }

    /// Same pixels, different tag.
    pub fn retagged(mut self, space: ColorSpace) -> ImagePlane {
        self.space = space;
        self
    }
}

/// Integer labels per pixel; 0 is background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    width: usize,
    height: usize,
    labels: Vec<u32>,
}

impl LabelImage {
    pub fn new(width: usize, height: usize, labels: Vec<u32>) -> Result<Self, ImageError> {
        if labels.len() != width * height {
            return Err(ImageError::ShapeMismatch {
                width,
                height,
                expected: width * height,
                got: labels.len(),
            });
        }
        Ok(LabelImage {
            width,
            height,
            labels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u32] {
        &mut self.labels
    }

    pub fn count(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }
}

/// Channel bit depth of an image file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

// Lab files store L/100 and (a + 128)/255, (b + 128)/255 in the channel range,
// which keeps a = b = 0 on an exact integer code in both depths.
fn lab_to_unit(p: [f64; 3]) -> [f64; 3] {
    [p[0] / 100.0, (p[1] + 128.0) / 255.0, (p[2] + 128.0) / 255.0]
}

fn unit_to_lab(p: [f64; 3]) -> [f64; 3] {
    [p[0] * 100.0, p[1] * 255.0 - 128.0, p[2] * 255.0 - 128.0]
}

fn format_for(path: &Path) -> Result<ImageFormat, ImageError> {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .as_deref()
    {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(ImageError::Codec {
            path: path.to_path_buf(),
            message: "unsupported extension (expected .png or .ppm)".into(),
        }),
    }
}

fn open_dynamic(path: &Path) -> Result<DynamicImage, ImageError> {
    let format = format_for(path)?;
    let bytes = std::fs::read(path).map_err(|source| ImageError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    image::load_from_memory_with_format(&bytes, format).map_err(|e| ImageError::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads an RGB image. The stored channel values are normalized by the
/// bit-depth maximum and interpreted in `space`.
pub fn read_image(path: &Path, space: ColorSpace) -> Result<(ImagePlane, BitDepth), ImageError> {
    let img = open_dynamic(path)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let color = img.color();
    let depth = if color.bytes_per_pixel() / color.channel_count() >= 2 {
        BitDepth::Sixteen
    } else {
        BitDepth::Eight
    };
    let max = depth.max_value();
    let pixels: Vec<[f64; 3]> = match depth {
        BitDepth::Sixteen => img
            .into_rgb16()
            .pixels()
            .map(|p| [p[0] as f64 / max, p[1] as f64 / max, p[2] as f64 / max])
            .collect(),
        BitDepth::Eight => img
            .into_rgb8()
            .pixels()
            .map(|p| [p[0] as f64 / max, p[1] as f64 / max, p[2] as f64 / max])
            .collect(),
    };
    let pixels = if space == ColorSpace::Lab {
        pixels.into_iter().map(unit_to_lab).collect()
    } else {
        pixels
    };
    Ok((ImagePlane::new(width, height, space, pixels)?, depth))
}

/// Writes the plane's channel values as stored (no conversion), clamped to
/// the representable range.
pub fn write_image(path: &Path, img: &ImagePlane, depth: BitDepth) -> Result<(), ImageError> {
    let format = format_for(path)?;
    let max = depth.max_value();
    let units = img.pixels.iter().map(|&p| {
        if img.space == ColorSpace::Lab {
            lab_to_unit(p)
        } else {
            p
        }
    });
    let quant = |v: f64| (v.clamp(0.0, 1.0) * max).round();
    let (w, h) = (img.width as u32, img.height as u32);
    let (bytes, color) = match depth {
        BitDepth::Eight => (
            units
                .flat_map(|p| p.map(|v| quant(v) as u8))
                .collect::<Vec<u8>>(),
            ExtendedColorType::Rgb8,
        ),
        // the encoders take 16-bit samples as native-endian bytes
        BitDepth::Sixteen => (
            units
                .flat_map(|p| p.map(|v| quant(v) as u16))
                .flat_map(u16::to_ne_bytes)
                .collect::<Vec<u8>>(),
            ExtendedColorType::Rgb16,
        ),
    };
    let result = match format {
        ImageFormat::Pnm => std::fs::File::create(path)
            .map_err(image::ImageError::IoError)
            .and_then(|f| {
                PnmEncoder::new(std::io::BufWriter::new(f))
                    .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
                    .write_image(&bytes, w, h, color)
            }),
        _ => image::save_buffer_with_format(path, &bytes, w, h, color, format),
    };
    result.map_err(|e| ImageError::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Reads a single-channel 8-bit mask.
pub fn read_mask(path: &Path) -> Result<LabelImage, ImageError> {
    let img = open_dynamic(path)?;
    let (width, height) = (img.width() as usize, img.height() as usize);
    let labels = img
        .into_luma8()
        .into_raw()
        .into_iter()
        .map(u32::from)
        .collect();
    LabelImage::new(width, height, labels)
}

pub fn write_mask(path: &Path, mask: &LabelImage) -> Result<(), ImageError> {
    let format = format_for(path)?;
    let mut buf = Vec::with_capacity(mask.labels.len());
    for &l in &mask.labels {
        buf.push(u8::try_from(l).map_err(|_| ImageError::LabelOverflow { label: l })?);
    }
    image::save_buffer_with_format(
        path,
        &buf,
        mask.width as u32,
        mask.height as u32,
        ExtendedColorType::L8,
        format,
    )
    .map_err(|e| ImageError::Codec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_is_checked() {
        assert!(ImagePlane::new(2, 2, ColorSpace::Linear, vec![[0.0; 3]; 3]).is_err());
        assert!(LabelImage::new(2, 1, vec![0, 1]).is_ok());
    }

    #[test]
    fn png16_roundtrip_is_lossless_on_codes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let px: Vec<[f64; 3]> = (0..12)
            .map(|i| {
                let v = (i * 5000) as f64 / 65535.0;
                [v, 1.0 - v, 0.5]
            })
            .collect();
        let img = ImagePlane::new(4, 3, ColorSpace::Srgb, px).unwrap();
        write_image(&path, &img, BitDepth::Sixteen).unwrap();
        let (back, depth) = read_image(&path, ColorSpace::Srgb).unwrap();
        assert_eq!(depth, BitDepth::Sixteen);
        for (a, b) in img.pixels().iter().zip(back.pixels()) {
            for c in 0..3 {
                assert!((a[c] - b[c]).abs() <= 0.5 / 65535.0);
            }
        }
    }

    #[test]
    fn ppm_and_mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let img = ImagePlane::filled(3, 2, ColorSpace::Srgb, [1.0, 0.0, 128.0 / 255.0]);
        let p = dir.path().join("x.ppm");
        write_image(&p, &img, BitDepth::Eight).unwrap();
        let (back, depth) = read_image(&p, ColorSpace::Srgb).unwrap();
        assert_eq!(depth, BitDepth::Eight);
        assert_eq!(back, img);
        assert!(std::fs::read(&p).unwrap().starts_with(b"P6"));

        let mask = LabelImage::new(3, 2, vec![0, 1, 2, 3, 4, 5]).unwrap();
        let mp = dir.path().join("m.png");
        write_mask(&mp, &mask).unwrap();
        assert_eq!(read_mask(&mp).unwrap(), mask);
        let big = LabelImage::new(1, 1, vec![300]).unwrap();
        assert!(write_mask(&mp, &big).is_err());
    }

    #[test]
    fn lab_file_encoding_keeps_neutral_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("lab.png");
        let img = ImagePlane::filled(2, 2, ColorSpace::Lab, [100.0, 0.0, 0.0]);
        write_image(&p, &img, BitDepth::Sixteen).unwrap();
        let (back, _) = read_image(&p, ColorSpace::Lab).unwrap();
        for px in back.pixels() {
            assert!((px[0] - 100.0).abs() < 1e-9);
            assert!(px[1].abs() < 1e-9 && px[2].abs() < 1e-9);
        }
    }
}
