use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::Legend;
use super::HarnessError;
use crate::colorspace::{Lab, WhitePoint};
use crate::estimators::{estimate_illuminant, von_kries_correct, EstimatorParams};
use crate::image::{read_image, ColorSpace, ImagePlane, LabelImage};
use crate::numeric::CompensatedSum;
use crate::psychophys::{Competitor, ModelOutputs};

/// One input image as seen by a predictor.
#[derive(Debug, Clone, Copy)]
pub struct SourceImage<'a> {
    /// Linear RGB.
    pub input: &'a ImagePlane,
    /// Manifest-relative path, when the image came from disk.
    pub relative: Option<&'a Path>,
    /// Ground-truth reflectance (linear RGB), when known.
    pub reflectance: Option<&'a ImagePlane>,
}

/// Anything that maps an input image to a per-pixel CIELAB reflectance
/// estimate.
pub trait Predictor: Sync {
    /// Name written to the `subject` column of result records.
    fn subject(&self) -> String;

    fn predict(&self, src: &SourceImage<'_>, wp: WhitePoint) -> Result<ImagePlane, HarnessError>;

    /// Stable description folded into the run's configuration hash.
    fn describe(&self) -> String {
        self.subject()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PredictorSource {
    /// Estimate the light per image, von Kries correct, convert to CIELAB.
    Builtin(EstimatorParams),
    /// The input itself in CIELAB: no constancy at all.
    Identity,
    /// Precomputed predictions stored under `dir` at the same relative
    /// path as each input image.
    External { dir: PathBuf, space: ColorSpace },
}

impl Predictor for PredictorSource {
    fn subject(&self) -> String {
        match self {
            PredictorSource::Builtin(p) => p.method.name().to_string(),
            PredictorSource::Identity => "identity".into(),
            PredictorSource::External { .. } => "external".into(),
        }
    }

    fn predict(&self, src: &SourceImage<'_>, wp: WhitePoint) -> Result<ImagePlane, HarnessError> {
        match self {
            PredictorSource::Builtin(p) => {
                let e = estimate_illuminant(src.input, p)?;
                Ok(von_kries_correct(src.input, &e)?.to_lab(wp))
            }
            PredictorSource::Identity => Ok(src.input.to_lab(wp)),
            PredictorSource::External { dir, space } => {
                let rel = src.relative.ok_or_else(|| {
                    HarnessError::DimensionMismatch(
                        "external predictions need an on-disk input".into(),
                    )
                })?;
                let (pred, _) = read_image(&dir.join(rel), *space)?;
                if pred.width() != src.input.width() || pred.height() != src.input.height() {
                    return Err(HarnessError::DimensionMismatch(format!(
                        "{}: prediction is {}x{}, input is {}x{}",
                        rel.display(),
                        pred.width(),
                        pred.height(),
                        src.input.width(),
                        src.input.height()
                    )));
                }
                Ok(pred.to_lab(wp))
            }
        }
    }

    fn describe(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Returns the ground-truth reflectance in CIELAB: a model with perfect
/// constancy.
#[derive(Debug, Clone, Copy, Default)]
pub struct PerfectKnowledge;

impl Predictor for PerfectKnowledge {
    fn subject(&self) -> String {
        "perfect-knowledge".into()
    }

    fn predict(&self, src: &SourceImage<'_>, wp: WhitePoint) -> Result<ImagePlane, HarnessError> {
        src.reflectance
            .map(|r| r.to_lab(wp))
            .ok_or(HarnessError::MissingGroundTruth)
    }
}

/// Running per-competitor sums of predicted CIELAB over masked pixels.
#[derive(Debug, Clone, Default)]
pub struct OutputAccumulator {
    sums: [[CompensatedSum; 3]; 5],
    counts: [u64; 5],
}

impl OutputAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(
        &mut self,
        prediction: &ImagePlane,
        mask: &LabelImage,
        legend: &Legend,
    ) -> Result<(), HarnessError> {
        prediction.expect_space(ColorSpace::Lab)?;
        if prediction.width() != mask.width() || prediction.height() != mask.height() {
            return Err(HarnessError::DimensionMismatch(format!(
                "prediction is {}x{}, mask is {}x{}",
                prediction.width(),
                prediction.height(),
                mask.width(),
                mask.height()
            )));
        }
        for (px, &label) in prediction.pixels().iter().zip(mask.labels()) {
            if let Some(c) = legend.competitor(label) {
                let i = c.index();
                for ch in 0..3 {
                    self.sums[i][ch].add(px[ch]);
                }
                self.counts[i] += 1;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &OutputAccumulator) {
        for i in 0..5 {
            for ch in 0..3 {
                self.sums[i][ch].add(other.sums[i][ch].value());
            }
            self.counts[i] += other.counts[i];
        }
    }

    pub fn count(&self, c: Competitor) -> u64 {
        self.counts[c.index()]
    }

    /// Per-competitor means; every competitor must have pixels.
    pub fn finish(&self) -> Result<ModelOutputs, HarnessError> {
        let mut out = ModelOutputs::new();
        for c in Competitor::ALL {
            let i = c.index();
            let n = self.counts[i];
            if n == 0 {
                return Err(HarnessError::EmptyMask(c));
            }
            let m = self.sums[i].map(|s| s.value() / n as f64);
            out.set(c, Lab::from_array(m), n);
        }
        Ok(out)
    }
}

/// Pixel-weighted mean CIELAB prediction per competitor over every
/// (prediction, mask) pair.
pub fn extract_outputs(
    pairs: &[(ImagePlane, LabelImage)],
    legend: &Legend,
) -> Result<ModelOutputs, HarnessError> {
    let mut acc = OutputAccumulator::new();
    for (p, m) in pairs {
        acc.add(p, m, legend)?;
    }
    acc.finish()
}
