use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::compare::DeltaRecord;
use super::grid::{CellError, CellRecord, GridRun};
use super::HarnessError;
use crate::psychophys::CciRecord;

pub const RECORD_HEADER: [&str; 7] = [
    "scene",
    "condition",
    "illuminant",
    "subject",
    "cci",
    "delta_cci",
    "cluster_warning",
];

const HUMAN_HEADER: [&str; 5] = ["scene", "condition", "illuminant", "subject", "cci"];

fn csv_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

fn io_err(path: &Path, source: std::io::Error) -> HarnessError {
    HarnessError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes grid records with four decimals. The bytes depend only on the
/// records, never on timing or worker count.
pub fn write_records_csv(path: &Path, records: &[CellRecord]) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(RECORD_HEADER)
        .map_err(|e| csv_err(path, e))?;
    for r in records {
        let delta = r.delta_cci.map(|d| format!("{d:.4}")).unwrap_or_default();
        w.write_record([
            r.key.scene.as_str(),
            &r.key.condition,
            &r.key.illuminant,
            &r.subject,
            &format!("{:.4}", r.cci),
            &delta,
            if r.cluster_warning { "true" } else { "false" },
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

fn read_table(path: &Path, required: &[&str]) -> Result<Vec<CciRecord>, HarnessError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    let headers = r.headers().map_err(|e| csv_err(path, e))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| csv_err(path, format!("missing column `{name}`")))
    };
    let idx: Vec<usize> = required.iter().map(|n| col(n)).collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let field = |i: usize| row.get(idx[i]).unwrap_or("").to_string();
        let raw = field(4);
        let cci: f64 = raw.parse().map_err(|_| {
            csv_err(
                path,
                format!("row {}: cci `{raw}` is not a number", line + 2),
            )
        })?;
        if !cci.is_finite() {
            return Err(csv_err(path, format!("row {}: non-finite cci", line + 2)));
        }
        out.push(CciRecord {
            scene: field(0),
            condition: field(1),
            illuminant: field(2),
            subject: field(3),
            cci_percent: cci,
        });
    }
    Ok(out)
}

/// Reads the `cci` column of a results file (extra columns are ignored).
pub fn read_records_csv(path: &Path) -> Result<Vec<CciRecord>, HarnessError> {
    read_table(path, &HUMAN_HEADER)
}

/// Reads human data with header `scene,condition,illuminant,subject,cci`.
pub fn read_human_csv(path: &Path) -> Result<Vec<CciRecord>, HarnessError> {
    read_table(path, &HUMAN_HEADER)
}

/// CSV of ΔCCI rows rounded to two decimals.
pub fn format_delta_table(rows: &[DeltaRecord]) -> String {
    let mut s = String::from("scene,condition,illuminant,subject,baseline_cci,cci,delta_cci\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{:.2},{:.2},{:.2}\n",
            r.scene, r.condition, r.illuminant, r.subject, r.baseline_cci, r.cci, r.delta_cci
        ));
    }
    s
}

/// SHA-256 over the manifest bytes and the predictor description.
pub fn config_hash(manifest_bytes: &[u8], predictor: &str) -> String {
    let mut h = Sha256::new();
    h.update((manifest_bytes.len() as u64).to_le_bytes());
    h.update(manifest_bytes);
    h.update(predictor.as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Run summary written next to the records. Holds no timestamps so that
/// identical runs produce identical files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub config_hash: String,
    pub predictor: String,
    pub cells: usize,
    pub succeeded: usize,
    pub cluster_warnings: usize,
    pub errors: Vec<CellError>,
}

impl RunReport {
    pub fn new(run: &GridRun, config_hash: String, predictor: String) -> Self {
        RunReport {
            schema: 1,
            config_hash,
            predictor,
            cells: run.records.len() + run.errors.len(),
            succeeded: run.records.len(),
            cluster_warnings: run.records.iter().filter(|r| r.cluster_warning).count(),
            errors: run.errors.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), HarnessError> {
        let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
        let body = serde_json::to_string_pretty(self).expect("serializable");
        f.write_all(body.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .map_err(|e| io_err(path, e))
    }
}
