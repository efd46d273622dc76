use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::manifest::Environment;
use super::HarnessError;
use crate::agreement::{
    bootstrap_mean_ci, metrics, observer_variability, BootstrapCi, ConditionVector, Metrics,
    ObserverMatrix, SubjectVariability, BOOTSTRAP_RESAMPLES,
};
use crate::numeric::mean;
use crate::psychophys::{delta_cci, CciRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    All,
    Indoor,
    Outdoor,
}

impl Scope {
    fn admits(self, env: Option<Environment>) -> bool {
        match self {
            Scope::All => true,
            Scope::Indoor => env == Some(Environment::Indoor),
            Scope::Outdoor => env == Some(Environment::Outdoor),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Measure {
    Cci,
    DeltaCci,
}

/// The unit at which model and human vectors are compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    /// Every (scene, condition, illuminant) cell.
    #[default]
    Cells,
    /// Per (scene, condition), averaged over illuminants.
    ConditionMeans,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub baseline: String,
    /// Scene → environment. Without it only the `all` scope is reported.
    pub environments: BTreeMap<String, Environment>,
    pub granularity: Granularity,
    pub seed: u64,
    pub resamples: usize,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions {
            baseline: "baseline".into(),
            environments: BTreeMap::new(),
            granularity: Granularity::Cells,
            seed: 0,
            resamples: BOOTSTRAP_RESAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeMetrics {
    pub scope: Scope,
    pub measure: Measure,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

/// Mean ΔCCI of one condition for the model, and across human subjects
/// with a bootstrap interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionDelta {
    pub condition: String,
    pub model_mean: Option<f64>,
    pub human: Option<BootstrapCi>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub model: String,
    pub scopes: Vec<ScopeMetrics>,
    pub condition_deltas: Vec<ConditionDelta>,
    pub variability: Option<Vec<SubjectVariability>>,
    pub variability_error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRecord {
    pub scene: String,
    pub condition: String,
    pub illuminant: String,
    pub subject: String,
    pub baseline_cci: f64,
    pub cci: f64,
    pub delta_cci: f64,
}

/// ΔCCI for every non-baseline record that has a baseline record with the
/// same scene, illuminant and subject. Output follows input order.
pub fn delta_records(records: &[CciRecord], baseline: &str) -> Vec<DeltaRecord> {
    let base: HashMap<(&str, &str, &str), &CciRecord> = records
        .iter()
        .filter(|r| r.condition == baseline)
        .map(|r| {
            (
                (r.scene.as_str(), r.illuminant.as_str(), r.subject.as_str()),
                r,
            )
        })
        .collect();
    records
        .iter()
        .filter(|r| r.condition != baseline)
        .filter_map(|r| {
            let b = base.get(&(r.scene.as_str(), r.illuminant.as_str(), r.subject.as_str()))?;
            let d = delta_cci(r, b).ok()?;
            Some(DeltaRecord {
                scene: r.scene.clone(),
                condition: r.condition.clone(),
                illuminant: r.illuminant.clone(),
                subject: r.subject.clone(),
                baseline_cci: b.cci_percent,
                cci: r.cci_percent,
                delta_cci: d,
            })
        })
        .collect()
}

fn key(scene: &str, condition: &str, illuminant: &str) -> String {
    format!("{scene}|{condition}|{illuminant}")
}

fn scene_of(key: &str) -> &str {
    key.split('|').next().unwrap_or("")
}

fn condition_of(key: &str) -> &str {
    key.split('|').nth(1).unwrap_or("")
}

struct Tables {
    cci: BTreeMap<String, ConditionVector>,
    delta: BTreeMap<String, ConditionVector>,
}

fn tables(records: &[CciRecord], baseline: &str) -> Result<Tables, HarnessError> {
    let mut cci: BTreeMap<String, ConditionVector> = BTreeMap::new();
    for r in records {
        cci.entry(r.subject.clone())
            .or_default()
            .insert(key(&r.scene, &r.condition, &r.illuminant), r.cci_percent)?;
    }
    let mut delta: BTreeMap<String, ConditionVector> = BTreeMap::new();
    for d in delta_records(records, baseline) {
        delta
            .entry(d.subject.clone())
            .or_default()
            .insert(key(&d.scene, &d.condition, &d.illuminant), d.delta_cci)?;
    }
    Ok(Tables { cci, delta })
}

fn matrix(
    vectors: &BTreeMap<String, ConditionVector>,
    f: impl Fn(&ConditionVector) -> ConditionVector,
) -> ObserverMatrix {
    let mut m = ObserverMatrix::new();
    for (s, v) in vectors {
        m.insert_subject(s.clone(), f(v));
    }
    m
}

/// Agreement of every model subject in `model` with the human table.
pub fn compare(
    model: &[CciRecord],
    humans: &[CciRecord],
    opts: &CompareOptions,
) -> Result<Vec<AgreementReport>, HarnessError> {
    let mt = tables(model, &opts.baseline)?;
    let ht = tables(humans, &opts.baseline)?;
    if ht.cci.is_empty() {
        return Err(HarnessError::NoOverlap("no human records".into()));
    }
    let scopes: Vec<Scope> = if opts.environments.is_empty() {
        vec![Scope::All]
    } else {
        vec![Scope::All, Scope::Indoor, Scope::Outdoor]
    };
    let env = |k: &str| opts.environments.get(scene_of(k)).copied();
    let shape = |v: &ConditionVector, scope: Scope| {
        let v = v.filter(|k| scope.admits(env(k)));
        match opts.granularity {
            Granularity::Cells => v,
            Granularity::ConditionMeans => v.collapse(|k| {
                let mut parts = k.split('|');
                format!(
                    "{}|{}",
                    parts.next().unwrap_or(""),
                    parts.next().unwrap_or("")
                )
            }),
        }
    };

    let human_keys: BTreeSet<String> = ht
        .cci
        .values()
        .flat_map(|v| v.keys().map(str::to_string))
        .collect();
    let mut reports = Vec::new();
    for (subject, model_cci) in &mt.cci {
        if !model_cci.keys().any(|k| human_keys.contains(k)) {
            return Err(HarnessError::NoOverlap(format!(
                "model `{subject}` shares no (scene, condition, illuminant) with the human data"
            )));
        }
        let empty = ConditionVector::new();
        let model_delta = mt.delta.get(subject).unwrap_or(&empty);
        let mut out = Vec::new();
        for &scope in &scopes {
            for (measure, mv, hv) in [
                (Measure::Cci, model_cci, &ht.cci),
                (Measure::DeltaCci, model_delta, &ht.delta),
            ] {
                let m = shape(mv, scope);
                let h = matrix(hv, |v| shape(v, scope));
                let (metrics, error) = match metrics(&m, &h) {
                    Ok(x) => (Some(x), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                out.push(ScopeMetrics {
                    scope,
                    measure,
                    metrics,
                    error,
                });
            }
        }

        let conditions: BTreeSet<&str> = model_delta
            .keys()
            .chain(ht.delta.values().flat_map(|v| v.keys()))
            .map(condition_of)
            .collect();
        let mut condition_deltas = Vec::new();
        for (i, cond) in conditions.into_iter().enumerate() {
            let of_cond = |v: &ConditionVector| v.filter(|k| condition_of(k) == cond).values();
            let mv = of_cond(model_delta);
            let per_subject: Vec<f64> = ht
                .delta
                .values()
                .map(of_cond)
                .filter(|v| !v.is_empty())
                .map(|v| mean(&v))
                .collect();
            condition_deltas.push(ConditionDelta {
                condition: cond.to_string(),
                model_mean: (!mv.is_empty()).then(|| mean(&mv)),
                human: bootstrap_mean_ci(
                    &per_subject,
                    opts.resamples,
                    opts.seed.wrapping_add(i as u64),
                    0.95,
                )
                .ok(),
            });
        }

        let (variability, variability_error) =
            match observer_variability(&matrix(&ht.cci, |v| v.clone())) {
                Ok(v) => (Some(v), None),
                Err(e) => (None, Some(e.to_string())),
            };
        reports.push(AgreementReport {
            model: subject.clone(),
            scopes: out,
            condition_deltas,
            variability,
            variability_error,
        });
    }
    Ok(reports)
}
