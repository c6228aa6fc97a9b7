//! Evaluation metrics: Pearson correlation, index of agreement, mean absolute
//! error, and the per-day spatial-mean aggregation over injected entries.
//!
//! r = Σ(pᵢ−p̄)(oᵢ−ō) / √(Σ(pᵢ−p̄)² Σ(oᵢ−ō)²)
//! IOA = 1 − Σ(pᵢ−oᵢ)² / Σ(|pᵢ−ō| + |oᵢ−ō|)²

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

fn check_lengths<T>(pred: &[T], obs: &[T], min: usize) -> Result<()> {
    if pred.len() != obs.len() {
        return Err(Error::dims(format!(
            "{} predictions vs {} observations",
            pred.len(),
            obs.len()
        )));
    }
    if pred.len() < min {
        return Err(Error::invalid(format!(
            "need at least {min} pairs, got {}",
            pred.len()
        )));
    }
    Ok(())
}

fn mean<T: Real>(v: &[T]) -> T {
    v.iter().copied().sum::<T>() / T::of(v.len() as f64)
}

/// Pearson correlation coefficient, clamped into [−1, 1] against rounding.
pub fn pearson_r<T: Real>(pred: &[T], obs: &[T]) -> Result<T> {
    check_lengths(pred, obs, 2)?;
    if pred.iter().all(|&v| v == pred[0]) || obs.iter().all(|&v| v == obs[0]) {
        return Err(Error::degenerate("correlation undefined for a constant vector"));
    }
    let (pm, om) = (mean(pred), mean(obs));
    let mut cov = T::zero();
    let mut pvar = T::zero();
    let mut ovar = T::zero();
    for (&p, &o) in pred.iter().zip(obs.iter()) {
        cov += (p - pm) * (o - om);
        pvar += (p - pm) * (p - pm);
        ovar += (o - om) * (o - om);
    }
    if pvar == T::zero() || ovar == T::zero() {
        return Err(Error::degenerate("correlation undefined for a constant vector"));
    }
    Ok((cov / (pvar * ovar).sqrt()).max(-T::one()).min(T::one()))
}

/// Index of agreement, clamped into [0, 1] against rounding.
pub fn ioa<T: Real>(pred: &[T], obs: &[T]) -> Result<T> {
    check_lengths(pred, obs, 2)?;
    let om = mean(obs);
    let mut num = T::zero();
    let mut den = T::zero();
    for (&p, &o) in pred.iter().zip(obs.iter()) {
        num += (p - o) * (p - o);
        let pot = (p - om).abs() + (o - om).abs();
        den += pot * pot;
    }
    if den == T::zero() {
        return Err(Error::degenerate(
            "index of agreement undefined: predictions and observations all equal ō",
        ));
    }
    Ok((T::one() - num / den).max(T::zero()).min(T::one()))
}

/// Mean absolute error.
pub fn mae<T: Real>(pred: &[T], obs: &[T]) -> Result<T> {
    check_lengths(pred, obs, 1)?;
    Ok(pred
        .iter()
        .zip(obs.iter())
        .map(|(&p, &o)| (p - o).abs())
        .sum::<T>()
        / T::of(pred.len() as f64))
}

/// Units of the values a report was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleTag {
    Normalized,
    MolecCm2,
}

impl std::str::FromStr for ScaleTag {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normalized" => Ok(ScaleTag::Normalized),
            "molec_cm2" => Ok(ScaleTag::MolecCm2),
            other => Err(Error::invalid(format!("unknown scale tag '{other}'"))),
        }
    }
}

impl std::fmt::Display for ScaleTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScaleTag::Normalized => write!(f, "normalized"),
            ScaleTag::MolecCm2 => write!(f, "molec_cm2"),
        }
    }
}

/// Spatial means over one day's injected entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayAggregate {
    pub day: usize,
    pub prediction: f64,
    pub observation: f64,
    pub count: usize,
}

/// For each day with at least one injected entry, the mean prediction and
/// mean truth over that day's entries, ordered by day.
pub fn daily_mean_pairs<T: Real>(
    entries: &[(usize, usize, usize)],
    predictions: &[T],
    truths: &[T],
) -> Result<Vec<DayAggregate>> {
    if entries.len() != predictions.len() || entries.len() != truths.len() {
        return Err(Error::dims("entries, predictions, and truths must align"));
    }
    let mut acc: BTreeMap<usize, (f64, f64, usize)> = BTreeMap::new();
    for (i, &(day, _, _)) in entries.iter().enumerate() {
        let slot = acc.entry(day).or_insert((0.0, 0.0, 0));
        slot.0 += predictions[i].to64();
        slot.1 += truths[i].to64();
        slot.2 += 1;
    }
    Ok(acc
        .into_iter()
        .map(|(day, (p, o, n))| DayAggregate {
            day,
            prediction: p / n as f64,
            observation: o / n as f64,
            count: n,
        })
        .collect())
}

/// Evaluation summary persisted as JSON. `r` is `None` when undefined (for
/// example against a constant mean-fill prediction).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub n: usize,
    pub r: Option<f64>,
    pub ioa: f64,
    pub mae: f64,
    pub scale: ScaleTag,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_day: Option<Vec<DayAggregate>>,
}

impl EvaluationReport {
    /// Correlation of the per-day mean pairs, when defined.
    pub fn per_day_r(&self) -> Option<f64> {
        let rows = self.per_day.as_ref()?;
        let pred: Vec<f64> = rows.iter().map(|d| d.prediction).collect();
        let obs: Vec<f64> = rows.iter().map(|d| d.observation).collect();
        pearson_r(&pred, &obs).ok()
    }
}

/// Score predictions against recorded truths.
pub fn evaluate<T: Real>(
    entries: &[(usize, usize, usize)],
    predictions: &[T],
    truths: &[T],
    scale: ScaleTag,
    with_per_day: bool,
) -> Result<EvaluationReport> {
    check_lengths(predictions, truths, 2)?;
    if entries.len() != predictions.len() {
        return Err(Error::dims("entries and predictions must align"));
    }
    let r = match pearson_r(predictions, truths) {
        Ok(v) => Some(v.to64()),
        Err(Error::DegenerateInput(_)) => None,
        Err(e) => return Err(e),
    };
    let report = EvaluationReport {
        n: predictions.len(),
        r,
        ioa: ioa(predictions, truths)?.to64(),
        mae: mae(predictions, truths)?.to64(),
        scale,
        per_day: with_per_day
            .then(|| daily_mean_pairs(entries, predictions, truths))
            .transpose()?,
    };
    Ok(report)
}
