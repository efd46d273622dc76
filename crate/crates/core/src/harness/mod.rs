//! Experiment-grid plumbing: manifests, mask-and-average extraction of
//! model outputs, grid evaluation, CSV/JSON persistence, and model–human
//! comparison.

mod battery;
mod compare;
mod extract;
mod grid;
mod manifest;
mod records;

pub use battery::{write_battery, BatteryOptions, BatteryScene};
pub use compare::{
    compare, delta_records, AgreementReport, CompareOptions, ConditionDelta, DeltaRecord,
    Granularity, Measure, Scope, ScopeMetrics,
};
pub use extract::{
    extract_outputs, OutputAccumulator, PerfectKnowledge, Predictor, PredictorSource, SourceImage,
};
pub use grid::{
    evaluate_cell, run_cells, run_grid, CellError, CellKey, CellRecord, GridRun, InMemoryCell,
};
pub use manifest::{
    load_manifest, Cell, ConditionEntry, Environment, Grouping, IlluminantEntry, ImageRef, Legend,
    Manifest, ManifestError, SceneEntry,
};
pub use records::{
    config_hash, format_delta_table, read_human_csv, read_records_csv, write_records_csv,
    RunReport, RECORD_HEADER,
};

use thiserror::Error;

use crate::agreement::AgreementError;
use crate::estimators::EstimateError;
use crate::image::ImageError;
use crate::psychophys::{Competitor, PsychophysError};
use crate::scenegen::SceneError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Psychophys(#[from] PsychophysError),
    #[error(transparent)]
    Agreement(#[from] AgreementError),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("EmptyMask: competitor {0} has no pixels in this cell")]
    EmptyMask(Competitor),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("predictor needs ground-truth reflectance, which this input lacks")]
    MissingGroundTruth,
    #[error("NoOverlap: {0}")]
    NoOverlap(String),
    #[error("{path}: {message}")]
    Csv { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}
