//! Temporal diagnostics: spatial averaging to a daily series, the augmented
//! Dickey-Fuller unit-root test, and the Ljung-Box independence test.
//!
//! ADF regresses `Δy_t = α (+ βt) + ρ·y_{t−1} + Σ φ_k·Δy_{t−k} + ε`, picks
//! the lag order by AIC on a common sample, and reports the t ratio of ρ.
//! Decisions compare against MacKinnon-style finite-sample critical values;
//! p-values interpolate an embedded asymptotic quantile table and degrade to
//! brackets outside its range.

use serde::{Serialize, Serializer};

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::real::Real;
use crate::tensor::MaskedTensor;

/// Spatial means per day over observed pixels, NaN where a day is empty.
#[derive(Debug, Clone, PartialEq)]
pub struct DailySeries<T> {
    pub values: Vec<T>,
    pub valid_counts: Vec<usize>,
}

impl<T: Real> DailySeries<T> {
    /// Values with empty days removed; logs a warning when any are dropped.
    pub fn dense_values(&self) -> Vec<T> {
        let dropped = self.valid_counts.iter().filter(|&&n| n == 0).count();
        if dropped > 0 {
            log::warn!("dropping {dropped} day(s) with no observed pixels from the series");
        }
        self.values.iter().copied().filter(|v| !v.is_nan()).collect()
    }
}

pub fn spatial_mean_series<T: Real>(tensor: &MaskedTensor<T>) -> DailySeries<T> {
    let (days, rows, cols) = tensor.dims();
    let mut values = Vec::with_capacity(days);
    let mut valid_counts = Vec::with_capacity(days);
    for d in 0..days {
        let mut sum = T::zero();
        let mut n = 0usize;
        for r in 0..rows {
            for c in 0..cols {
                if tensor.mask()[[d, r, c]] {
                    sum += tensor.values()[[d, r, c]];
                    n += 1;
                }
            }
        }
        values.push(if n == 0 { T::nan() } else { sum / T::of(n as f64) });
        valid_counts.push(n);
    }
    DailySeries { values, valid_counts }
}

/// p-value, or a bracket when the statistic falls outside the tabulated range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PValue {
    Exact(f64),
    Below(f64),
    Above(f64),
}

impl PValue {
    /// Conservative numeric bound usable for threshold decisions.
    pub fn upper_bound(&self) -> f64 {
        match *self {
            PValue::Exact(p) | PValue::Below(p) => p,
            PValue::Above(_) => 1.0,
        }
    }
}

impl std::fmt::Display for PValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PValue::Exact(p) => write!(f, "{p}"),
            PValue::Below(p) => write!(f, "< {p}"),
            PValue::Above(p) => write!(f, "> {p}"),
        }
    }
}

impl Serialize for PValue {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PValue::Exact(p) => serializer.serialize_f64(*p),
            PValue::Below(p) => serializer.serialize_str(&format!("< {p}")),
            PValue::Above(p) => serializer.serialize_str(&format!("> {p}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Decision {
    pub level: f64,
    pub reject: bool,
    /// Critical value behind the decision, when the test has one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub critical_value: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: PValue,
    pub lags_used: usize,
    pub decisions: Vec<Decision>,
}

impl TestResult {
    pub fn rejects_at(&self, level: f64) -> Option<bool> {
        self.decisions
            .iter()
            .find(|d| (d.level - level).abs() < 1e-12)
            .map(|d| d.reject)
    }
}

/// Deterministic terms included in the ADF regression.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regression {
    Constant,
    ConstantTrend,
}

impl std::str::FromStr for Regression {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "constant" | "c" => Ok(Regression::Constant),
            "constant-trend" | "ct" => Ok(Regression::ConstantTrend),
            other => Err(Error::invalid(format!("unknown regression '{other}'"))),
        }
    }
}

// MacKinnon (2010) response-surface coefficients for the 1%/5%/10% critical
// values: crit = β∞ + β1/T + β2/T² + β3/T³ at T effective observations.
const CRIT_CONSTANT: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];
const CRIT_TREND: [[f64; 4]; 3] = [
    [-3.95877, -9.0531, -28.428, -134.155],
    [-3.41049, -4.3904, -9.036, -45.374],
    [-3.12705, -2.5856, -3.925, -22.380],
];
const CRIT_LEVELS: [f64; 3] = [0.01, 0.05, 0.10];

// Asymptotic Dickey-Fuller quantiles used for p-value interpolation.
const P_QUANTILES: [f64; 8] = [0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99];
const TAU_CONSTANT: [f64; 8] = [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60];
const TAU_TREND: [f64; 8] = [-3.96, -3.66, -3.41, -3.13, -1.25, -0.94, -0.66, -0.33];

/// Finite-sample critical value at `level` for `nobs` effective observations.
pub fn adf_critical_value(regression: Regression, level: f64, nobs: usize) -> Result<f64> {
    let table = match regression {
        Regression::Constant => &CRIT_CONSTANT,
        Regression::ConstantTrend => &CRIT_TREND,
    };
    let row = CRIT_LEVELS
        .iter()
        .position(|&l| (l - level).abs() < 1e-12)
        .ok_or_else(|| Error::invalid(format!("no critical values tabulated at level {level}")))?;
    let t = nobs as f64;
    let [b_inf, b1, b2, b3] = table[row];
    Ok(b_inf + b1 / t + b2 / (t * t) + b3 / (t * t * t))
}

fn adf_p_value(statistic: f64, regression: Regression) -> PValue {
    let taus = match regression {
        Regression::Constant => &TAU_CONSTANT,
        Regression::ConstantTrend => &TAU_TREND,
    };
    if statistic < taus[0] {
        return PValue::Below(P_QUANTILES[0]);
    }
    if statistic > taus[taus.len() - 1] {
        return PValue::Above(P_QUANTILES[P_QUANTILES.len() - 1]);
    }
    for i in 0..taus.len() - 1 {
        if statistic <= taus[i + 1] {
            let f = (statistic - taus[i]) / (taus[i + 1] - taus[i]);
            return PValue::Exact(P_QUANTILES[i] + f * (P_QUANTILES[i + 1] - P_QUANTILES[i]));
        }
    }
    PValue::Exact(P_QUANTILES[P_QUANTILES.len() - 1])
}

fn check_series<T: Real>(series: &[T]) -> Result<()> {
    if series.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("series contains non-finite values"));
    }
    let first = series.first().copied().unwrap_or_else(T::zero);
    if series.iter().all(|&v| v == first) {
        return Err(Error::degenerate("series has zero variance"));
    }
    Ok(())
}

/// Design matrix and response for the ADF regression with `p` lagged
/// differences, using observations `t = start..n-1` of the original series.
fn adf_design<T: Real>(
    series: &[T],
    diffs: &[T],
    p: usize,
    start: usize,
    regression: Regression,
) -> (Array2<T>, Array1<T>) {
    let n = series.len();
    let rows = n - start;
    let trend = matches!(regression, Regression::ConstantTrend);
    let k = 2 + p + usize::from(trend);
    let mut x = Array2::<T>::zeros((rows, k));
    let mut y = Array1::<T>::zeros(rows);
    for (row, t) in (start..n).enumerate() {
        // diffs[t - 1] = y_t − y_{t−1}
        y[row] = diffs[t - 1];
        x[[row, 0]] = T::one();
        let mut col = 1;
        if trend {
            x[[row, col]] = T::of(t as f64);
            col += 1;
        }
        x[[row, col]] = series[t - 1];
        col += 1;
        for lag in 1..=p {
            x[[row, col]] = diffs[t - 1 - lag];
            col += 1;
        }
    }
    (x, y)
}

/// Column index of the ρ coefficient in [`adf_design`].
fn rho_column(regression: Regression) -> usize {
    match regression {
        Regression::Constant => 1,
        Regression::ConstantTrend => 2,
    }
}

/// Augmented Dickey-Fuller test of the unit-root null. The lag order is
/// chosen by AIC on a common sample up to `max_lag` (capped so the largest
/// candidate still leaves a healthy sample), then the chosen model is
/// refitted on its full sample.
pub fn adf_test<T: Real>(
    series: &[T],
    max_lag: usize,
    regression: Regression,
) -> Result<TestResult> {
    let n = series.len();
    let trend = usize::from(matches!(regression, Regression::ConstantTrend));
    // At p = max_lag the regression has 2 + trend + p parameters on
    // n - 1 - max_lag rows; keep at least 5 residual degrees of freedom.
    let cap = (n.saturating_sub(8 + trend)) / 2;
    let max_lag = max_lag.min(cap);
    if n <= max_lag + 10 || cap == 0 {
        return Err(Error::invalid(format!(
            "series length {n} too short for an ADF regression with max_lag {max_lag}"
        )));
    }
    check_series(series)?;

    let diffs: Vec<T> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let rho_col = rho_column(regression);

    // Lag selection on the sample shared by every candidate.
    let common_start = max_lag + 1;
    let mut best: Option<(f64, usize)> = None;
    for p in 0..=max_lag {
        let (x, y) = adf_design(series, &diffs, p, common_start, regression);
        let fit = ols(&x, &y)?;
        let aic = fit.aic().to64();
        if best.map_or(true, |(a, _)| aic < a) {
            best = Some((aic, p));
        }
    }
    let (_, lags) = best.expect("at least the p = 0 candidate exists");

    // Final fit on the maximal sample for the chosen lag order.
    let (x, y) = adf_design(series, &diffs, lags, lags + 1, regression);
    let fit = ols(&x, &y)?;
    let statistic = fit.t_ratio(rho_col).to64();
    if !statistic.is_finite() {
        return Err(Error::degenerate("ADF statistic is not finite"));
    }

    let decisions = CRIT_LEVELS
        .iter()
        .map(|&level| {
            let crit = adf_critical_value(regression, level, fit.nobs)?;
            Ok(Decision { level, reject: statistic < crit, critical_value: Some(crit) })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TestResult { statistic, p_value: adf_p_value(statistic, regression), lags_used: lags, decisions })
}

/// Sample autocorrelations ρ̂_1..ρ̂_max of a series.
pub fn sample_autocorrelations<T: Real>(series: &[T], max_lag: usize) -> Result<Vec<T>> {
    let n = series.len();
    if n <= max_lag {
        return Err(Error::invalid(format!("need more than {max_lag} observations, got {n}")));
    }
    check_series(series)?;
    let mean = series.iter().copied().sum::<T>() / T::of(n as f64);
    let denom = series.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>();
    let mut acf = Vec::with_capacity(max_lag);
    for k in 1..=max_lag {
        let mut num = T::zero();
        for t in k..n {
            num += (series[t] - mean) * (series[t - k] - mean);
        }
        acf.push(num / denom);
    }
    Ok(acf)
}

/// Survival function of the chi-square distribution via the regularized
/// upper incomplete gamma.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else {
        statrs::function::gamma::gamma_ur(df / 2.0, x / 2.0)
    }
}

/// Ljung-Box portmanteau test of joint autocorrelation:
/// Q = n(n+2) Σ_{k=1..lags} ρ̂_k²/(n−k), with a chi-square(lags) null.
pub fn ljung_box_test<T: Real>(series: &[T], lags: usize) -> Result<TestResult> {
    if lags == 0 {
        return Err(Error::invalid("lags must be at least 1"));
    }
    let n = series.len();
    if n <= lags {
        return Err(Error::invalid(format!("series length {n} must exceed lags {lags}")));
    }
    let acf = sample_autocorrelations(series, lags)?;
    let nf = n as f64;
    let mut q = 0.0f64;
    for (k, rho) in acf.iter().enumerate() {
        let rho = rho.to64();
        q += rho * rho / (nf - (k + 1) as f64);
    }
    q *= nf * (nf + 2.0);
    let p = chi_square_sf(q, lags as f64);
    let decisions = [0.01, 0.05, 0.10]
        .iter()
        .map(|&level| Decision { level, reject: p < level, critical_value: None })
        .collect();
    Ok(TestResult { statistic: q, p_value: PValue::Exact(p), lags_used: lags, decisions })
}
