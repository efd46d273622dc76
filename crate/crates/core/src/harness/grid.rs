use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::extract::{OutputAccumulator, Predictor, SourceImage};
use super::manifest::{Cell, Grouping, Legend, Manifest};
use super::HarnessError;
use crate::colorspace::WhitePoint;
use crate::image::{read_image, read_mask, ImagePlane, LabelImage};
use crate::numeric::mean;
use crate::psychophys::{cci_in, derive_match, CompetitorSet, MatchResult, ProjectionSpace};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub scene: String,
    pub condition: String,
    pub illuminant: String,
}

impl CellKey {
    pub fn new(
        scene: impl Into<String>,
        condition: impl Into<String>,
        illuminant: impl Into<String>,
    ) -> Self {
        CellKey {
            scene: scene.into(),
            condition: condition.into(),
            illuminant: illuminant.into(),
        }
    }
}

impl std::fmt::Display for CellKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "({}, {}, {})",
            self.scene, self.condition, self.illuminant
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    #[serde(flatten)]
    pub key: CellKey,
    pub subject: String,
    pub cci: f64,
    /// Against the cell's baseline condition; `None` when that cell failed
    /// or is absent.
    pub delta_cci: Option<f64>,
    pub cluster_warning: bool,
    /// One match for pooled grouping, one per trial otherwise.
    pub matches: Vec<MatchResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellError {
    #[serde(flatten)]
    pub key: CellKey,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GridRun {
    pub records: Vec<CellRecord>,
    pub errors: Vec<CellError>,
}

impl GridRun {
    pub fn is_partial(&self) -> bool {
        !self.errors.is_empty()
    }

    pub fn record(&self, scene: &str, condition: &str, illuminant: &str) -> Option<&CellRecord> {
        self.records.iter().find(|r| {
            r.key.scene == scene && r.key.condition == condition && r.key.illuminant == illuminant
        })
    }
}

/// Shared settings of one grid evaluation.
#[derive(Debug, Clone)]
struct Settings<'a> {
    white_point: WhitePoint,
    legend: &'a Legend,
    space: ProjectionSpace,
    grouping: Grouping,
}

/// Matches and scores per-trial (or pooled) accumulators.
fn score(
    groups: BTreeMap<u32, OutputAccumulator>,
    comps: &CompetitorSet,
    s: &Settings<'_>,
) -> Result<(f64, bool, Vec<MatchResult>), HarnessError> {
    let groups: Vec<OutputAccumulator> = match s.grouping {
        Grouping::PerTrial => groups.into_values().collect(),
        Grouping::Pooled => {
            let mut all = OutputAccumulator::new();
            for g in groups.values() {
                all.merge(g);
            }
            vec![all]
        }
    };
    let mut ccis = Vec::with_capacity(groups.len());
    let mut matches = Vec::with_capacity(groups.len());
    for g in &groups {
        let outputs = g.finish()?;
        let m = derive_match(&outputs, comps, s.space)?;
        ccis.push(cci_in(s.space, m.matched, comps)?);
        matches.push(m);
    }
    let warn = matches.iter().any(|m| m.cluster_warning);
    Ok((mean(&ccis), warn, matches))
}

fn run_cell(
    cell: &Cell,
    predictor: &dyn Predictor,
    s: &Settings<'_>,
) -> Result<(f64, bool, Vec<MatchResult>), HarnessError> {
    let mut groups: BTreeMap<u32, OutputAccumulator> = BTreeMap::new();
    for im in &cell.images {
        let (raw, _) = read_image(&im.image, cell.color_space)?;
        let input = raw.to_linear(s.white_point);
        let mask = read_mask(&im.mask)?;
        let src = SourceImage {
            input: &input,
            relative: Some(&im.relative),
            reflectance: None,
        };
        let pred = predictor.predict(&src, s.white_point)?;
        groups
            .entry(im.trial)
            .or_default()
            .add(&pred, &mask, s.legend)?;
    }
    score(groups, &cell.competitors, s)
}

/// A cell whose images are already in memory, e.g. straight from the
/// scene generator.
#[derive(Debug, Clone)]
pub struct InMemoryCell {
    pub key: CellKey,
    pub competitors: CompetitorSet,
    /// (linear input, ground-truth reflectance if known, mask, trial)
    pub images: Vec<(ImagePlane, Option<ImagePlane>, LabelImage, u32)>,
}

/// Scores one in-memory cell: returns the CCI, the cluster warning flag
/// and the underlying matches.
pub fn evaluate_cell(
    cell: &InMemoryCell,
    predictor: &dyn Predictor,
    legend: &Legend,
    white_point: WhitePoint,
    space: ProjectionSpace,
    grouping: Grouping,
) -> Result<(f64, bool, Vec<MatchResult>), HarnessError> {
    let s = Settings {
        white_point,
        legend,
        space,
        grouping,
    };
    let mut groups: BTreeMap<u32, OutputAccumulator> = BTreeMap::new();
    for (input, refl, mask, trial) in &cell.images {
        let src = SourceImage {
            input,
            relative: None,
            reflectance: refl.as_ref(),
        };
        let pred = predictor.predict(&src, white_point)?;
        groups.entry(*trial).or_default().add(&pred, mask, legend)?;
    }
    score(groups, &cell.competitors, &s)
}

fn collect(
    keys: Vec<CellKey>,
    outcomes: Vec<Result<(f64, bool, Vec<MatchResult>), HarnessError>>,
    subject: &str,
    baseline_for: impl Fn(&str) -> String,
) -> GridRun {
    let mut run = GridRun::default();
    for (key, outcome) in keys.into_iter().zip(outcomes) {
        match outcome {
            Ok((cci, cluster_warning, matches)) => run.records.push(CellRecord {
                key,
                subject: subject.to_string(),
                cci,
                delta_cci: None,
                cluster_warning,
                matches,
            }),
            Err(e) => run.errors.push(CellError {
                key,
                error: e.to_string(),
            }),
        }
    }
    let by_key: HashMap<CellKey, f64> =
        run.records.iter().map(|r| (r.key.clone(), r.cci)).collect();
    for r in &mut run.records {
        let base = CellKey {
            condition: baseline_for(&r.key.condition),
            ..r.key.clone()
        };
        r.delta_cci = by_key.get(&base).map(|b| r.cci - b);
    }
    run
}

fn pool(jobs: Option<usize>) -> rayon::ThreadPool {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n.max(1));
    }
    b.build().expect("thread pool")
}

/// Evaluates every cell of the manifest. Cells run in parallel on `jobs`
/// workers (all cores when `None`); output order is the manifest's cell
/// order whatever the worker count, and a failing cell lands in the error
/// roster without affecting the others.
pub fn run_grid(manifest: &Manifest, predictor: &dyn Predictor, jobs: Option<usize>) -> GridRun {
    let s = Settings {
        white_point: manifest.white_point,
        legend: &manifest.legend,
        space: manifest.projection_space,
        grouping: manifest.grouping,
    };
    let outcomes: Vec<_> = pool(jobs).install(|| {
        manifest
            .cells
            .par_iter()
            .map(|c| run_cell(c, predictor, &s))
            .collect()
    });
    let keys = manifest
        .cells
        .iter()
        .map(|c| CellKey::new(&c.scene, &c.condition, &c.illuminant))
        .collect();
    collect(keys, outcomes, &predictor.subject(), |c| {
        manifest.baseline_for(c).to_string()
    })
}

/// [`run_grid`] for in-memory cells with a single baseline condition.
pub fn run_cells(
    cells: &[InMemoryCell],
    predictor: &dyn Predictor,
    baseline: &str,
    jobs: Option<usize>,
) -> GridRun {
    let legend = Legend::default();
    let outcomes: Vec<_> = pool(jobs).install(|| {
        cells
            .par_iter()
            .map(|c| {
                evaluate_cell(
                    c,
                    predictor,
                    &legend,
                    WhitePoint::D65,
                    ProjectionSpace::Lab,
                    Grouping::Pooled,
                )
            })
            .collect()
    });
    let keys = cells.iter().map(|c| c.key.clone()).collect();
    collect(keys, outcomes, &predictor.subject(), |_| {
        baseline.to_string()
    })
}
