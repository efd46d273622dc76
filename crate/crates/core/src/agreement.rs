//! Model–human agreement statistics: Pearson accuracy, bias, normalized
//! RMSE, Lin's concordance correlation, the leave-one-out human ceiling,
//! normalized CCC, and observer variability.
//!
//! Missing data is handled pairwise-complete: every two-vector statistic
//! uses exactly the keys present in both vectors.
//!
//! Moment conventions: CCC uses population (n) moments, the human standard
//! deviation in [`normalized_error`] uses the sample (n − 1) divisor, and the
//! coefficient of variation uses the population divisor.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{compensated_sum, mean};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AgreementError {
    #[error("zero variance")]
    ZeroVariance,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("mismatched keys: no condition is present in both vectors")]
    MismatchedKeys,
    #[error("human standard deviation is zero")]
    ZeroSd,
    #[error("CCC undefined: both vectors constant and equal")]
    DegenerateInputs,
    #[error("human ceiling is not positive ({0})")]
    ZeroCeiling(f64),
    #[error("subject {0} has zero mean")]
    ZeroMean(String),
    #[error("non-finite value for key {0}")]
    NonFinite(String),
    #[error("duplicate key {0}")]
    DuplicateKey(String),
}

/// Condition key → value for one subject or model.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ConditionVector {
    values: BTreeMap<String, f64>,
}

impl ConditionVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<K, I>(pairs: I) -> Result<Self, AgreementError>
    where
        K: Into<String>,
        I: IntoIterator<Item = (K, f64)>,
    {
        let mut v = ConditionVector::new();
        for (k, x) in pairs {
            v.insert(k.into(), x)?;
        }
        Ok(v)
    }

    /// Convenience for tests and examples: keys are the positions.
    pub fn from_values(values: &[f64]) -> Self {
        ConditionVector {
            values: values
                .iter()
                .enumerate()
                .map(|(i, v)| (format!("{i:06}"), *v))
                .collect(),
        }
    }

    pub fn insert(&mut self, key: String, value: f64) -> Result<(), AgreementError> {
        if !value.is_finite() {
            return Err(AgreementError::NonFinite(key));
        }
        if self.values.contains_key(&key) {
            return Err(AgreementError::DuplicateKey(key));
        }
        self.values.insert(key, value);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        self.values.get(key).copied()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.values.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn values(&self) -> Vec<f64> {
        self.values.values().copied().collect()
    }

    /// Keeps only keys accepted by `keep`.
    pub fn filter(&self, mut keep: impl FnMut(&str) -> bool) -> ConditionVector {
        ConditionVector {
            values: self
                .values
                .iter()
                .filter(|(k, _)| keep(k))
                .map(|(k, v)| (k.clone(), *v))
                .collect(),
        }
    }

    /// Re-keys with `f` and averages values that collapse onto one key.
    pub fn collapse(&self, mut f: impl FnMut(&str) -> String) -> ConditionVector {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (k, v) in &self.values {
            groups.entry(f(k)).or_default().push(*v);
        }
        ConditionVector {
            values: groups.into_iter().map(|(k, vs)| (k, mean(&vs))).collect(),
        }
    }

    /// Values at the keys shared with `other`, in key order.
    pub fn paired(&self, other: &ConditionVector) -> (Vec<f64>, Vec<f64>) {
        self.values
            .iter()
            .filter_map(|(k, x)| other.values.get(k).map(|y| (*x, *y)))
            .unzip()
    }
}

struct Moments {
    mean_x: f64,
    mean_y: f64,
    var_x: f64,
    var_y: f64,
    cov: f64,
}

fn moments(x: &[f64], y: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean_x = mean(x);
    let mean_y = mean(y);
    let var_x = compensated_sum(x.iter().map(|v| (v - mean_x).powi(2))) / n;
    let var_y = compensated_sum(y.iter().map(|v| (v - mean_y).powi(2))) / n;
    let cov = compensated_sum(x.iter().zip(y).map(|(a, b)| (a - mean_x) * (b - mean_y))) / n;
    Moments {
        mean_x,
        mean_y,
        var_x,
        var_y,
        cov,
    }
}

fn pair_at_least(
    x: &ConditionVector,
    y: &ConditionVector,
    min: usize,
) -> Result<(Vec<f64>, Vec<f64>), AgreementError> {
    let (a, b) = x.paired(y);
    if a.is_empty() {
        return Err(AgreementError::MismatchedKeys);
    }
    if a.len() < min {
        return Err(AgreementError::InsufficientData(format!(
            "{} shared conditions, need {min}",
            a.len()
        )));
    }
    Ok((a, b))
}

pub fn pearson(x: &ConditionVector, y: &ConditionVector) -> Result<f64, AgreementError> {
    let (a, b) = pair_at_least(x, y, 2)?;
    pearson_slices(&a, &b)
}

fn pearson_slices(a: &[f64], b: &[f64]) -> Result<f64, AgreementError> {
    let m = moments(a, b);
    if m.var_x <= 0.0 || m.var_y <= 0.0 {
        return Err(AgreementError::ZeroVariance);
    }
    Ok((m.cov / (m.var_x.sqrt() * m.var_y.sqrt())).clamp(-1.0, 1.0))
}

/// Mean of `model − human_mean`.
pub fn bias(model: &ConditionVector, human_mean: &ConditionVector) -> Result<f64, AgreementError> {
    let (a, b) = pair_at_least(model, human_mean, 1)?;
    Ok(compensated_sum(a.iter().zip(&b).map(|(m, h)| m - h)) / a.len() as f64)
}

/// RMSE of `model − human_mean` divided by `human_sd`.
pub fn normalized_error(
    model: &ConditionVector,
    human_mean: &ConditionVector,
    human_sd: f64,
) -> Result<f64, AgreementError> {
    if !(human_sd > 0.0) {
        return Err(AgreementError::ZeroSd);
    }
    let (a, b) = pair_at_least(model, human_mean, 1)?;
    let mse = compensated_sum(a.iter().zip(&b).map(|(m, h)| (m - h).powi(2))) / a.len() as f64;
    Ok(mse.sqrt() / human_sd)
}

/// Lin's concordance correlation coefficient with population moments.
pub fn lin_ccc(x: &ConditionVector, y: &ConditionVector) -> Result<f64, AgreementError> {
    let (a, b) = pair_at_least(x, y, 2)?;
    ccc_slices(&a, &b)
}

fn ccc_slices(a: &[f64], b: &[f64]) -> Result<f64, AgreementError> {
    let m = moments(a, b);
    let denom = m.var_x + m.var_y + (m.mean_x - m.mean_y).powi(2);
    if denom <= 0.0 {
        return Err(AgreementError::DegenerateInputs);
    }
    Ok(2.0 * m.cov / denom)
}

/// Sample (n − 1) standard deviation.
pub fn sample_sd(values: &[f64]) -> Result<f64, AgreementError> {
    if values.len() < 2 {
        return Err(AgreementError::InsufficientData(
            "need at least two values for a standard deviation".into(),
        ));
    }
    let m = mean(values);
    let ss = compensated_sum(values.iter().map(|v| (v - m).powi(2)));
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Subjects × conditions grid; cells may be missing.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ObserverMatrix {
    subjects: BTreeMap<String, ConditionVector>,
}

impl ObserverMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert_subject(&mut self, subject: impl Into<String>, values: ConditionVector) {
        self.subjects.insert(subject.into(), values);
    }

    pub fn insert(&mut self, subject: &str, key: String, value: f64) -> Result<(), AgreementError> {
        self.subjects
            .entry(subject.to_string())
            .or_default()
            .insert(key, value)
    }

    pub fn subjects(&self) -> impl Iterator<Item = (&str, &ConditionVector)> {
        self.subjects.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn subject_count(&self) -> usize {
        self.subjects.len()
    }

    pub fn map_vectors(&self, mut f: impl FnMut(&ConditionVector) -> ConditionVector) -> Self {
        ObserverMatrix {
            subjects: self
                .subjects
                .iter()
                .map(|(k, v)| (k.clone(), f(v)))
                .collect(),
        }
    }

    /// Mean across available subjects per condition.
    pub fn mean_vector(&self) -> ConditionVector {
        self.mean_excluding(None)
    }

    fn mean_excluding(&self, skip: Option<&str>) -> ConditionVector {
        let mut acc: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
        for (s, v) in &self.subjects {
            if Some(s.as_str()) == skip {
                continue;
            }
            for (k, x) in v.iter() {
                acc.entry(k).or_default().push(x);
            }
        }
        ConditionVector {
            values: acc
                .into_iter()
                .map(|(k, vs)| (k.to_string(), mean(&vs)))
                .collect(),
        }
    }

    /// Every observed value, pooled over subjects and conditions.
    pub fn pooled_values(&self) -> Vec<f64> {
        self.subjects.values().flat_map(|v| v.values()).collect()
    }

    pub fn conditions(&self) -> BTreeSet<String> {
        self.subjects
            .values()
            .flat_map(|v| v.keys().map(str::to_string))
            .collect()
    }
}

/// Mean over subjects of CCC(subject, mean of the other subjects).
pub fn loo_ceiling(humans: &ObserverMatrix) -> Result<f64, AgreementError> {
    if humans.subject_count() < 2 {
        return Err(AgreementError::InsufficientData(
            "ceiling needs at least two subjects".into(),
        ));
    }
    let mut cccs = Vec::with_capacity(humans.subject_count());
    for (s, v) in humans.subjects() {
        let others = humans.mean_excluding(Some(s));
        cccs.push(lin_ccc(v, &others)?);
    }
    Ok(mean(&cccs))
}

/// CCC against the human mean, divided by the leave-one-out ceiling.
pub fn nccc(model: &ConditionVector, humans: &ObserverMatrix) -> Result<f64, AgreementError> {
    let ceiling = loo_ceiling(humans)?;
    if !(ceiling > 0.0) {
        return Err(AgreementError::ZeroCeiling(ceiling));
    }
    Ok(lin_ccc(model, &humans.mean_vector())? / ceiling)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectVariability {
    pub subject: String,
    /// Mean Pearson correlation against each other subject.
    pub mean_pairwise_pearson: f64,
    /// Standard deviation over mean across the subject's conditions.
    pub coefficient_of_variation: f64,
}

pub fn observer_variability(
    humans: &ObserverMatrix,
) -> Result<Vec<SubjectVariability>, AgreementError> {
    if humans.subject_count() < 2 {
        return Err(AgreementError::InsufficientData(
            "variability needs at least two subjects".into(),
        ));
    }
    let mut out = Vec::new();
    for (s, v) in humans.subjects() {
        if v.len() < 2 {
            return Err(AgreementError::InsufficientData(format!(
                "subject {s} has fewer than two conditions"
            )));
        }
        let mut rs = Vec::new();
        for (o, w) in humans.subjects() {
            if o != s {
                rs.push(pearson(v, w)?);
            }
        }
        let vals = v.values();
        let m = mean(&vals);
        if m == 0.0 {
            return Err(AgreementError::ZeroMean(s.to_string()));
        }
        let sd = (compensated_sum(vals.iter().map(|x| (x - m).powi(2))) / vals.len() as f64).sqrt();
        out.push(SubjectVariability {
            subject: s.to_string(),
            mean_pairwise_pearson: mean(&rs),
            coefficient_of_variation: sd / m,
        });
    }
    Ok(out)
}

/// The metric bundle for one model in one scope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub n: usize,
    pub accuracy: Option<f64>,
    pub bias: f64,
    pub normalized_error: Option<f64>,
    pub ccc: Option<f64>,
    pub ceiling: Option<f64>,
    pub nccc: Option<f64>,
}

/// Computes every metric that is defined for the data; undefined ones
/// (zero variance, single subject, ...) are reported as `None`.
pub fn metrics(
    model: &ConditionVector,
    humans: &ObserverMatrix,
) -> Result<Metrics, AgreementError> {
    let human_mean = humans.mean_vector();
    let (paired, _) = model.paired(&human_mean);
    if paired.is_empty() {
        return Err(AgreementError::MismatchedKeys);
    }
    let bias_v = bias(model, &human_mean)?;
    let sd = sample_sd(&humans.pooled_values()).ok();
    let normalized = sd.and_then(|s| normalized_error(model, &human_mean, s).ok());
    let ccc = lin_ccc(model, &human_mean).ok();
    let ceiling = loo_ceiling(humans).ok();
    let nccc_v = match (ccc, ceiling) {
        (Some(c), Some(k)) if k > 0.0 => Some(c / k),
        _ => None,
    };
    Ok(Metrics {
        n: paired.len(),
        accuracy: pearson(model, &human_mean).ok(),
        bias: bias_v,
        normalized_error: normalized,
        ccc,
        ceiling,
        nccc: nccc_v,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCi {
    pub mean: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub resamples: usize,
}

/// Default number of bootstrap resamples.
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;

/// Percentile bootstrap interval for the mean of `values` (one value per
/// subject). Resample `i` draws from its own ChaCha stream, so the result
/// does not depend on the thread count.
pub fn bootstrap_mean_ci(
    values: &[f64],
    resamples: usize,
    seed: u64,
    level: f64,
) -> Result<BootstrapCi, AgreementError> {
    if values.is_empty() || resamples == 0 {
        return Err(AgreementError::InsufficientData(
            "bootstrap needs values and resamples".into(),
        ));
    }
    let n = values.len();
    let mut means: Vec<f64> = (0..resamples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let draws: Vec<f64> = (0..n).map(|_| values[rng.gen_range(0..n)]).collect();
            mean(&draws)
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let idx = ((p * resamples as f64).ceil() as usize).clamp(1, resamples) - 1;
        means[idx]
    };
    let alpha = (1.0 - level) / 2.0;
    Ok(BootstrapCi {
        mean: mean(values),
        lower: q(alpha),
        upper: q(1.0 - alpha),
        level,
        resamples,
    })
}
