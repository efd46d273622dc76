use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::{Lab, WhitePoint};
use crate::image::{read_mask, ColorSpace};
use crate::psychophys::{Competitor, CompetitorSet, ProjectionSpace};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("ParseError in {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("MissingFile: {entry} references {path}")]
    MissingFile { entry: String, path: PathBuf },
    #[error("InvariantViolation in {entry}: {message}")]
    InvariantViolation { entry: String, message: String },
}

fn violation(entry: impl Into<String>, message: impl Into<String>) -> ManifestError {
    ManifestError::InvariantViolation {
        entry: entry.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Environment {
    Indoor,
    Outdoor,
}

impl std::str::FromStr for Environment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "indoor" => Ok(Environment::Indoor),
            "outdoor" => Ok(Environment::Outdoor),
            other => Err(format!("unknown environment `{other}`")),
        }
    }
}

/// How the images of one cell are combined before matching.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grouping {
    /// One pixel-weighted average over every image of the cell.
    #[default]
    Pooled,
    /// A match per trial; the cell's CCI is the mean over trials.
    PerTrial,
}

/// Mask value of each competitor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, u32>", into = "BTreeMap<String, u32>")]
pub struct Legend {
    values: [u32; 5],
}

impl Default for Legend {
    fn default() -> Self {
        Legend {
            values: [1, 2, 3, 4, 5],
        }
    }
}

impl Legend {
    pub fn value(&self, c: Competitor) -> u32 {
        self.values[c.index()]
    }

    pub fn competitor(&self, label: u32) -> Option<Competitor> {
        Competitor::ALL
            .into_iter()
            .find(|c| self.value(*c) == label)
    }
}

impl TryFrom<BTreeMap<String, u32>> for Legend {
    type Error = String;

    fn try_from(map: BTreeMap<String, u32>) -> Result<Self, Self::Error> {
        let mut values = [0u32; 5];
        let mut seen = BTreeSet::new();
        for (k, v) in map {
            let c: Competitor = k.parse()?;
            if v == 0 || v > 255 {
                return Err(format!("legend value {v} for {c} must be in 1..=255"));
            }
            if !seen.insert(v) {
                return Err(format!("legend value {v} used twice"));
            }
            values[c.index()] = v;
        }
        if let Some(c) = Competitor::ALL.into_iter().find(|c| values[c.index()] == 0) {
            return Err(format!("legend has no entry for {c}"));
        }
        Ok(Legend { values })
    }
}

impl From<Legend> for BTreeMap<String, u32> {
    fn from(l: Legend) -> Self {
        Competitor::ALL
            .into_iter()
            .map(|c| (c.label().to_string(), l.value(c)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneEntry {
    pub id: String,
    pub environment: Environment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub id: String,
    #[serde(default)]
    pub mechanism: Option<String>,
    /// Condition this one is compared against; defaults to the manifest's
    /// baseline condition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub baseline: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IlluminantEntry {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageEntry {
    pub image: PathBuf,
    pub mask: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
    #[serde(default)]
    pub trial: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellEntry {
    pub scene: String,
    pub condition: String,
    pub illuminant: String,
    pub color_space: ColorSpace,
    pub competitors: BTreeMap<String, [f64; 3]>,
    pub images: Vec<ImageEntry>,
}

/// The on-disk layout. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub white_point: Option<[f64; 3]>,
    pub baseline_condition: String,
    pub scenes: Vec<SceneEntry>,
    pub conditions: Vec<ConditionEntry>,
    pub illuminants: Vec<IlluminantEntry>,
    #[serde(default)]
    pub legend: Legend,
    #[serde(default)]
    pub projection_space: ProjectionSpace,
    #[serde(default)]
    pub grouping: Grouping,
    pub cells: Vec<CellEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImageRef {
    /// As written in the manifest.
    pub relative: PathBuf,
    pub image: PathBuf,
    pub mask: PathBuf,
    pub position: Option<usize>,
    pub trial: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scene: String,
    pub condition: String,
    pub illuminant: String,
    pub color_space: ColorSpace,
    pub competitors: CompetitorSet,
    pub images: Vec<ImageRef>,
}

/// A validated manifest with resolved paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub white_point: WhitePoint,
    pub baseline_condition: String,
    pub scenes: Vec<SceneEntry>,
    pub conditions: Vec<ConditionEntry>,
    pub illuminants: Vec<IlluminantEntry>,
    pub legend: Legend,
    pub projection_space: ProjectionSpace,
    pub grouping: Grouping,
    pub cells: Vec<Cell>,
    /// Raw file bytes, kept for the run's configuration hash.
    pub source: Vec<u8>,
}

impl Manifest {
    /// The condition a given condition's ΔCCI is measured against.
    pub fn baseline_for(&self, condition: &str) -> &str {
        self.conditions
            .iter()
            .find(|c| c.id == condition)
            .and_then(|c| c.baseline.as_deref())
            .unwrap_or(&self.baseline_condition)
    }

    pub fn environments(&self) -> BTreeMap<String, Environment> {
        self.scenes
            .iter()
            .map(|s| (s.id.clone(), s.environment))
            .collect()
    }
}

fn unique<'a>(
    kind: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<BTreeSet<&'a str>, ManifestError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if !seen.insert(id) {
            return Err(violation(format!("{kind} `{id}`"), "duplicate id"));
        }
    }
    Ok(seen)
}

/// Loads and eagerly validates a manifest: ids, cross references, file
/// existence, competitor geometry, and mask coverage of all five
/// competitors in every cell.
pub fn load_manifest(path: &Path) -> Result<Manifest, ManifestError> {
    let source = std::fs::read(path).map_err(|source| ManifestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let file: ManifestFile = serde_json::from_slice(&source).map_err(|e| ManifestError::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    validate(file, base, path, source)
}

fn validate(
    file: ManifestFile,
    base: &Path,
    path: &Path,
    source: Vec<u8>,
) -> Result<Manifest, ManifestError> {
    if file.schema != SCHEMA_VERSION {
        return Err(violation(
            "schema",
            format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                file.schema
            ),
        ));
    }
    let white_point = match file.white_point {
        None => WhitePoint::D65,
        Some([x, y, z]) => {
            WhitePoint::new(x, y, z).map_err(|e| violation("white_point", e.to_string()))?
        }
    };
    let scenes = unique("scene", file.scenes.iter().map(|s| s.id.as_str()))?;
    let conditions = unique("condition", file.conditions.iter().map(|s| s.id.as_str()))?;
    let illuminants = unique("illuminant", file.illuminants.iter().map(|s| s.id.as_str()))?;
    if !conditions.contains(file.baseline_condition.as_str()) {
        return Err(violation(
            "baseline_condition",
            format!("unknown condition `{}`", file.baseline_condition),
        ));
    }
    for c in &file.conditions {
        if let Some(b) = &c.baseline {
            if !conditions.contains(b.as_str()) {
                return Err(violation(
                    format!("condition `{}`", c.id),
                    format!("unknown baseline `{b}`"),
                ));
            }
        }
    }
    if file.cells.is_empty() {
        return Err(violation("cells", "manifest has no cells"));
    }

    let mut seen_cells = BTreeSet::new();
    let mut cells = Vec::with_capacity(file.cells.len());
    for (i, c) in file.cells.iter().enumerate() {
        let entry = format!(
            "cells[{i}] ({}, {}, {})",
            c.scene, c.condition, c.illuminant
        );
        if !scenes.contains(c.scene.as_str()) {
            return Err(violation(&entry, format!("unknown scene `{}`", c.scene)));
        }
        if !conditions.contains(c.condition.as_str()) {
            return Err(violation(
                &entry,
                format!("unknown condition `{}`", c.condition),
            ));
        }
        if !illuminants.contains(c.illuminant.as_str()) {
            return Err(violation(
                &entry,
                format!("unknown illuminant `{}`", c.illuminant),
            ));
        }
        if !seen_cells.insert((&c.scene, &c.condition, &c.illuminant)) {
            return Err(violation(&entry, "duplicate cell"));
        }
        let mut positions = Vec::with_capacity(5);
        for (label, lab) in &c.competitors {
            let comp: Competitor = label.parse().map_err(|e: String| violation(&entry, e))?;
            positions.push((comp, Lab::from_array(*lab)));
        }
        let competitors = CompetitorSet::new(positions, &c.scene, &c.condition, &c.illuminant)
            .map_err(|e| violation(&entry, e.to_string()))?;
        if c.images.is_empty() {
            return Err(violation(&entry, "cell lists no images"));
        }

        let mut covered = BTreeSet::new();
        let mut images = Vec::with_capacity(c.images.len());
        for im in &c.images {
            let image = base.join(&im.image);
            let mask = base.join(&im.mask);
            for p in [&image, &mask] {
                if !p.is_file() {
                    return Err(ManifestError::MissingFile {
                        entry: entry.clone(),
                        path: p.clone(),
                    });
                }
            }
            let labels = read_mask(&mask).map_err(|e| violation(&entry, e.to_string()))?;
            for &l in labels.labels() {
                if let Some(comp) = file.legend.competitor(l) {
                    covered.insert(comp);
                }
            }
            images.push(ImageRef {
                relative: im.image.clone(),
                image,
                mask,
                position: im.position,
                trial: im.trial,
            });
        }
        if let Some(missing) = Competitor::ALL.into_iter().find(|c| !covered.contains(c)) {
            return Err(violation(
                &entry,
                format!("no mask covers competitor {missing}"),
            ));
        }
        cells.push(Cell {
            scene: c.scene.clone(),
            condition: c.condition.clone(),
            illuminant: c.illuminant.clone(),
            color_space: c.color_space,
            competitors,
            images,
        });
    }

    Ok(Manifest {
        path: path.to_path_buf(),
        white_point,
        baseline_condition: file.baseline_condition,
        scenes: file.scenes,
        conditions: file.conditions,
        illuminants: file.illuminants,
        legend: file.legend,
        projection_space: file.projection_space,
        grouping: file.grouping,
        cells,
        source,
    })
}
