use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{CellKey, InMemoryCell};
use super::manifest::{
    CellEntry, ConditionEntry, Environment, Grouping, IlluminantEntry, ImageEntry, Legend,
    ManifestFile, SceneEntry, SCHEMA_VERSION,
};
use super::HarnessError;
use crate::colorspace::WhitePoint;
use crate::image::{write_image, write_mask, BitDepth, ColorSpace};
use crate::psychophys::ProjectionSpace;
use crate::scenegen::{
    apply_mechanism, competitor_scene_set, competitor_set, CompetitorImage, IlluminantSpec,
    MechanismSpec, SceneError, SceneSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryScene {
    pub id: String,
    pub environment: Environment,
    pub scene: SceneSpec,
}

/// A scene × mechanism × illuminant grid built from generated scenes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryOptions {
    pub scenes: Vec<BatteryScene>,
    pub illuminants: Vec<IlluminantSpec>,
    pub mechanisms: Vec<MechanismSpec>,
    /// Patch indices where competitors are shown; each is one trial.
    pub positions: Vec<usize>,
    pub white_point: WhitePoint,
}

impl BatteryOptions {
    /// Two standard scenes (labelled indoor and outdoor, seeds `seed` and
    /// `seed + 1`), the four chromatic lights and every mechanism.
    ///
    /// The neutral light is left out: under it the reflectance and
    /// tristimulus matches coincide and no competitor axis exists.
    pub fn standard(seed: u64) -> Self {
        BatteryOptions {
            scenes: vec![
                BatteryScene {
                    id: "indoor".into(),
                    environment: Environment::Indoor,
                    scene: SceneSpec::standard(seed),
                },
                BatteryScene {
                    id: "outdoor".into(),
                    environment: Environment::Outdoor,
                    scene: SceneSpec::standard(seed.wrapping_add(1)),
                },
            ],
            illuminants: IlluminantSpec::chromatic_defaults(),
            mechanisms: MechanismSpec::battery(),
            positions: SceneSpec::standard_positions(),
            white_point: WhitePoint::D65,
        }
    }

    fn cell_specs(&self) -> Vec<(&BatteryScene, &MechanismSpec, &IlluminantSpec)> {
        let mut out = Vec::new();
        for s in &self.scenes {
            for m in &self.mechanisms {
                for l in &self.illuminants {
                    out.push((s, m, l));
                }
            }
        }
        out
    }

    fn build(
        &self,
        s: &BatteryScene,
        m: &MechanismSpec,
        l: &IlluminantSpec,
    ) -> Result<(crate::psychophys::CompetitorSet, Vec<CompetitorImage>), SceneError> {
        let wp = self.white_point;
        let scene = apply_mechanism(&s.scene, m, l, wp)?;
        let comps = competitor_set(&scene, l, wp)?.with_ids(&s.id, m.name(), &l.name);
        let images = competitor_scene_set(&scene, &comps, &self.positions, l, wp)?;
        Ok((comps, images))
    }

    fn trial(&self, position: usize) -> u32 {
        self.positions
            .iter()
            .position(|p| *p == position)
            .unwrap_or(0) as u32
    }

    /// Every cell rendered in memory, in scene → mechanism → light order.
    pub fn cells(&self) -> Result<Vec<InMemoryCell>, SceneError> {
        self.cell_specs()
            .into_par_iter()
            .map(|(s, m, l)| {
                let (competitors, images) = self.build(s, m, l)?;
                Ok(InMemoryCell {
                    key: CellKey::new(&s.id, m.name(), &l.name),
                    competitors,
                    images: images
                        .into_iter()
                        .map(|ci| {
                            let trial = self.trial(ci.position);
                            (ci.image, Some(ci.reflectance), ci.mask, trial)
                        })
                        .collect(),
                })
            })
            .collect()
    }
}

/// Writes the battery under `dir` as 16-bit linear PNGs with masks, a
/// mirrored `gt/` tree of ground-truth reflectances (usable as an external
/// prediction directory), and `manifest.json`. Returns the manifest path.
pub fn write_battery(dir: &Path, opts: &BatteryOptions) -> Result<PathBuf, HarnessError> {
    let io = |path: &Path, source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    };
    let cells: Vec<CellEntry> = opts
        .cell_specs()
        .into_par_iter()
        .map(|(s, m, l)| -> Result<CellEntry, HarnessError> {
            let (comps, images) = opts.build(s, m, l)?;
            let rel_dir = PathBuf::from(&s.id).join(m.name()).join(&l.name);
            for sub in [dir.join(&rel_dir), dir.join("gt").join(&rel_dir)] {
                std::fs::create_dir_all(&sub).map_err(|e| io(&sub, e))?;
            }
            let mut entries = Vec::with_capacity(images.len());
            for ci in &images {
                let stem = format!("{}_{}", ci.competitor.label(), ci.position);
                let image = rel_dir.join(format!("{stem}.png"));
                let mask = rel_dir.join(format!("{stem}_mask.png"));
                write_image(&dir.join(&image), &ci.image, BitDepth::Sixteen)?;
                write_image(
                    &dir.join("gt").join(&image),
                    &ci.reflectance,
                    BitDepth::Sixteen,
                )?;
                write_mask(&dir.join(&mask), &ci.mask)?;
                entries.push(ImageEntry {
                    image,
                    mask,
                    position: Some(ci.position),
                    trial: opts.trial(ci.position),
                });
            }
            Ok(CellEntry {
                scene: s.id.clone(),
                condition: m.name().to_string(),
                illuminant: l.name.clone(),
                color_space: ColorSpace::Linear,
                competitors: comps
                    .iter()
                    .map(|(c, lab)| (c.label().to_string(), lab.to_array()))
                    .collect::<BTreeMap<_, _>>(),
                images: entries,
            })
        })
        .collect::<Result<_, _>>()?;

    let file = ManifestFile {
        schema: SCHEMA_VERSION,
        white_point: Some(opts.white_point.to_array()),
        baseline_condition: MechanismSpec::Baseline.name().to_string(),
        scenes: opts
            .scenes
            .iter()
            .map(|s| SceneEntry {
                id: s.id.clone(),
                environment: s.environment,
            })
            .collect(),
        conditions: opts
            .mechanisms
            .iter()
            .map(|m| ConditionEntry {
                id: m.name().to_string(),
                mechanism: Some(m.name().to_string()),
                baseline: None,
            })
            .collect(),
        illuminants: opts
            .illuminants
            .iter()
            .map(|l| IlluminantEntry {
                id: l.name.clone(),
                name: Some(l.name.clone()),
            })
            .collect(),
        legend: Legend::default(),
        projection_space: ProjectionSpace::Lab,
        grouping: Grouping::Pooled,
        cells,
    };
    let path = dir.join("manifest.json");
    let body = serde_json::to_string_pretty(&file).expect("serializable") + "\n";
    std::fs::write(&path, body).map_err(|e| io(&path, e))?;
    Ok(path)
}
