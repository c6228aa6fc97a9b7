//! Spatial-only competitors applied per day slice: ordinary kriging with a
//! fitted exponential semivariogram, inverse-distance weighting, and the
//! global-mean fill.
//!
//! The kriging system for k neighbors solves
//!
//! ```text
//! [γ(x₁,x₁) … γ(x₁,x_k) 1] [w₁]   [γ(x₁,x₀)]
//! [   …        …        …] [… ] = [    …    ]
//! [γ(x_k,x₁) … γ(x_k,x_k) 1] [w_k]  [γ(x_k,x₀)]
//! [   1      …    1      0] [μ ]   [    1    ]
//! ```
//!
//! so the weights sum to 1 (ordinary-kriging unbiasedness) and the estimation
//! variance is `Σ wᵢ γ(xᵢ,x₀) + μ`.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::GridSpec;
use crate::linalg::solve_in_place;
use crate::real::Real;
use crate::tensor::MaskedTensor;

/// Fitted exponential semivariogram. `range_param` is the effective range:
/// γ(h) = nugget + (sill − nugget)·(1 − exp(−3h/range)), with γ(0) = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariogramModel {
    pub nugget: f64,
    pub sill: f64,
    pub range_param: f64,
}

impl VariogramModel {
    pub fn exponential(nugget: f64, sill: f64, range_param: f64) -> Result<Self> {
        if !(nugget >= 0.0) {
            return Err(Error::invalid(format!("nugget must be nonnegative, got {nugget}")));
        }
        if !(sill >= nugget) {
            return Err(Error::invalid(format!("sill {sill} below nugget {nugget}")));
        }
        if !(range_param > 0.0) {
            return Err(Error::invalid(format!("range must be positive, got {range_param}")));
        }
        Ok(Self { nugget, sill, range_param })
    }

    /// Semivariance at separation `h`; zero at the origin by convention.
    pub fn gamma(&self, h: f64) -> f64 {
        if h <= 0.0 {
            0.0
        } else {
            self.nugget + (self.sill - self.nugget) * (1.0 - (-3.0 * h / self.range_param).exp())
        }
    }

    pub fn partial_sill(&self) -> f64 {
        self.sill - self.nugget
    }
}

/// Matheron estimator binned by separation distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentalVariogram {
    /// Lag bin centers in degrees; only bins with at least one pair appear.
    pub bin_centers: Vec<f64>,
    pub semivariance: Vec<f64>,
    pub pair_counts: Vec<usize>,
}

impl ExperimentalVariogram {
    pub fn len(&self) -> usize {
        self.bin_centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bin_centers.is_empty()
    }
}

/// Classical estimator γ̂(h) = Σ (z_a − z_b)² / (2 n_k) over observed pixel
/// pairs with degree-space distance inside bin k; bins cover [0, max_lag].
pub fn experimental_semivariogram<T: Real>(
    slice: ArrayView2<T>,
    grid: &GridSpec,
    lag_width: f64,
    max_lag: f64,
) -> Result<ExperimentalVariogram> {
    if !(lag_width > 0.0) {
        return Err(Error::invalid(format!("lag width must be positive, got {lag_width}")));
    }
    if !(max_lag > 0.0) {
        return Err(Error::invalid(format!("max lag must be positive, got {max_lag}")));
    }
    let mut sites: Vec<(f64, f64, f64)> = Vec::new();
    for ((r, c), v) in slice.indexed_iter() {
        if !v.is_nan() {
            let (lat, lon) = grid.cell_center(r, c);
            sites.push((lat, lon, v.to64()));
        }
    }
    if sites.len() < 2 {
        return Err(Error::degenerate(format!(
            "semivariogram needs at least 2 observed pixels, got {}",
            sites.len()
        )));
    }

    let n_bins = (max_lag / lag_width).ceil() as usize;
    let mut sums = vec![0.0f64; n_bins];
    let mut counts = vec![0usize; n_bins];
    for a in 0..sites.len() {
        for b in (a + 1)..sites.len() {
            let d = ((sites[a].0 - sites[b].0).powi(2) + (sites[a].1 - sites[b].1).powi(2)).sqrt();
            if d > max_lag {
                continue;
            }
            let k = ((d / lag_width).floor() as usize).min(n_bins - 1);
            let diff = sites[a].2 - sites[b].2;
            sums[k] += diff * diff;
            counts[k] += 1;
        }
    }

    let mut out = ExperimentalVariogram {
        bin_centers: Vec::new(),
        semivariance: Vec::new(),
        pair_counts: Vec::new(),
    };
    for k in 0..n_bins {
        if counts[k] > 0 {
            out.bin_centers.push((k as f64 + 0.5) * lag_width);
            out.semivariance.push(sums[k] / (2.0 * counts[k] as f64));
            out.pair_counts.push(counts[k]);
        }
    }
    if out.is_empty() {
        return Err(Error::degenerate("no pixel pairs fell inside any lag bin"));
    }
    Ok(out)
}

/// Weighted least squares of (nugget, partial sill) at a fixed range.
/// Negative solutions are clamped to the boundary of the feasible set.
fn ls_at_range(emp: &ExperimentalVariogram, range: f64) -> Option<(f64, f64, f64)> {
    let mut sw = 0.0;
    let mut sf = 0.0;
    let mut sff = 0.0;
    let mut sy = 0.0;
    let mut sfy = 0.0;
    for k in 0..emp.len() {
        let w = emp.pair_counts[k] as f64;
        let f = 1.0 - (-3.0 * emp.bin_centers[k] / range).exp();
        let y = emp.semivariance[k];
        sw += w;
        sf += w * f;
        sff += w * f * f;
        sy += w * y;
        sfy += w * f * y;
    }
    let det = sw * sff - sf * sf;
    let (mut nugget, mut psill) = if det.abs() > 1e-12 * (sw * sff).abs().max(f64::MIN_POSITIVE) {
        ((sy * sff - sf * sfy) / det, (sw * sfy - sf * sy) / det)
    } else {
        // Saturated regressor: γ ≈ nugget + psill everywhere; fall back to a
        // pure nugget description of the same level.
        (sy / sw, 0.0)
    };
    if psill < 0.0 {
        psill = 0.0;
        nugget = sy / sw;
    }
    if nugget < 0.0 {
        nugget = 0.0;
        psill = if sff > 0.0 { (sfy / sff).max(0.0) } else { 0.0 };
    }
    let mut sse = 0.0;
    for k in 0..emp.len() {
        let w = emp.pair_counts[k] as f64;
        let f = 1.0 - (-3.0 * emp.bin_centers[k] / range).exp();
        let r = emp.semivariance[k] - nugget - psill * f;
        sse += w * r * r;
    }
    sse.is_finite().then_some((nugget, psill, sse))
}

/// Fit γ(h) = nugget + (sill − nugget)(1 − exp(−3h/range)) to the empirical
/// points by pair-count-weighted least squares, scanning the range and
/// refining the best bracket by golden section. Returns the model and the
/// correlation between fitted and empirical semivariances (0 when that
/// correlation is undefined, e.g. for a flat variogram).
pub fn fit_exponential(emp: &ExperimentalVariogram) -> Result<(VariogramModel, f64)> {
    if emp.len() < 3 {
        return Err(Error::degenerate(format!(
            "exponential fit needs at least 3 nonempty bins, got {}",
            emp.len()
        )));
    }
    let h_max = *emp.bin_centers.last().expect("nonempty");
    let h_min = emp.bin_centers[0];
    let lo = (h_min * 0.25).max(h_max * 1e-4);
    let hi = h_max * 4.0;

    let mut best: Option<(f64, f64, f64, f64)> = None; // (sse, nugget, psill, range)
    let steps = 200;
    for i in 0..=steps {
        let range = lo * (hi / lo).powf(i as f64 / steps as f64);
        if let Some((nugget, psill, sse)) = ls_at_range(emp, range) {
            if best.map_or(true, |(s, ..)| sse < s) {
                best = Some((sse, nugget, psill, range));
            }
        }
    }
    let (_, _, _, coarse_range) = best.ok_or_else(|| {
        Error::FitFailure("no feasible (nugget, sill, range) candidate".into())
    })?;

    // Golden-section refinement around the coarse optimum.
    let ratio = (hi / lo).powf(1.0 / steps as f64);
    let mut a = coarse_range / ratio;
    let mut b = coarse_range * ratio;
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let sse_of = |r: f64| ls_at_range(emp, r).map_or(f64::INFINITY, |(_, _, s)| s);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = sse_of(x1);
    let mut f2 = sse_of(x2);
    for _ in 0..60 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse_of(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse_of(x2);
        }
    }
    let range = 0.5 * (a + b);
    let (nugget, psill, refined_sse) =
        ls_at_range(emp, range).ok_or_else(|| Error::FitFailure("refinement diverged".into()))?;
    let (nugget, psill, range) = if refined_sse <= best.expect("set above").0 {
        (nugget, psill, range)
    } else {
        let (_, n, p, r) = best.expect("set above");
        (n, p, r)
    };

    let model = VariogramModel::exponential(nugget, nugget + psill, range)?;
    let fitted: Vec<f64> = emp.bin_centers.iter().map(|&h| model.gamma(h)).collect();
    let fit_r = correlation(&fitted, &emp.semivariance).unwrap_or(0.0);
    Ok((model, fit_r))
}

/// Plain Pearson correlation; `None` when either side is constant.
fn correlation(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cab = 0.0;
    let mut caa = 0.0;
    let mut cbb = 0.0;
    for (&x, &y) in a.iter().zip(b.iter()) {
        cab += (x - ma) * (y - mb);
        caa += (x - ma) * (x - ma);
        cbb += (y - mb) * (y - mb);
    }
    (caa > 0.0 && cbb > 0.0).then(|| cab / (caa * cbb).sqrt())
}

/// Ordinary kriging at `target` from the `neighborhood` nearest known points.
/// Returns the estimate and the kriging variance (clamped at zero).
pub fn kriging_predict<T: Real>(
    known: &[((f64, f64), T)],
    model: &VariogramModel,
    target: (f64, f64),
    neighborhood: usize,
) -> Result<(T, f64)> {
    if known.is_empty() {
        return Err(Error::invalid("kriging needs at least one known point"));
    }
    if neighborhood == 0 {
        return Err(Error::invalid("neighborhood must be at least 1"));
    }

    let mut order: Vec<(usize, f64)> = known
        .iter()
        .enumerate()
        .map(|(i, ((lat, lon), _))| {
            (i, (lat - target.0).powi(2) + (lon - target.1).powi(2))
        })
        .collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));

    // Exact at data sites, and sidesteps the singular zero-nugget system.
    if order[0].1 == 0.0 {
        return Ok((known[order[0].0].1, 0.0));
    }

    // Deduplicate coincident sample positions among the selected neighbors.
    let mut picked: Vec<usize> = Vec::with_capacity(neighborhood);
    for &(i, _) in &order {
        if picked.len() >= neighborhood {
            break;
        }
        let (pi, _) = known[i];
        if picked.iter().all(|&j| known[j].0 != pi) {
            picked.push(i);
        }
    }
    let k = picked.len();

    let m = k + 1;
    let mut mat = Array2::<f64>::zeros((m, m));
    let mut rhs = Array1::<f64>::zeros(m);
    for a in 0..k {
        let (pa, _) = known[picked[a]];
        for b in 0..k {
            if a != b {
                let (pb, _) = known[picked[b]];
                let h = ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
                mat[[a, b]] = model.gamma(h);
            }
        }
        mat[[a, k]] = 1.0;
        mat[[k, a]] = 1.0;
        let h0 = ((pa.0 - target.0).powi(2) + (pa.1 - target.1).powi(2)).sqrt();
        rhs[a] = model.gamma(h0);
    }
    rhs[k] = 1.0;

    let weights = solve_in_place(&mut mat, &mut rhs)
        .map_err(|_| Error::Singular("ordinary kriging system".into()))?;

    let mut estimate = 0.0f64;
    let mut variance = weights[k]; // Lagrange multiplier μ
    for a in 0..k {
        let (pa, va) = known[picked[a]];
        estimate += weights[a] * va.to64();
        let h0 = ((pa.0 - target.0).powi(2) + (pa.1 - target.1).powi(2)).sqrt();
        variance += weights[a] * model.gamma(h0);
    }
    Ok((T::of(estimate), variance.max(0.0)))
}

/// Kriging weights for a target, exposed for the unbiasedness checks.
pub fn kriging_weights<T: Real>(
    known: &[((f64, f64), T)],
    model: &VariogramModel,
    target: (f64, f64),
    neighborhood: usize,
) -> Result<Vec<f64>> {
    if known.is_empty() {
        return Err(Error::invalid("kriging needs at least one known point"));
    }
    let mut order: Vec<(usize, f64)> = known
        .iter()
        .enumerate()
        .map(|(i, ((lat, lon), _))| (i, (lat - target.0).powi(2) + (lon - target.1).powi(2)))
        .collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let k = neighborhood.min(order.len());
    let m = k + 1;
    let mut mat = Array2::<f64>::zeros((m, m));
    let mut rhs = Array1::<f64>::zeros(m);
    for a in 0..k {
        let (pa, _) = known[order[a].0];
        for b in 0..k {
            if a != b {
                let (pb, _) = known[order[b].0];
                let h = ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
                mat[[a, b]] = model.gamma(h);
            }
        }
        mat[[a, k]] = 1.0;
        mat[[k, a]] = 1.0;
        let h0 = ((pa.0 - target.0).powi(2) + (pa.1 - target.1).powi(2)).sqrt();
        rhs[a] = model.gamma(h0);
    }
    rhs[k] = 1.0;
    let sol = solve_in_place(&mut mat, &mut rhs)
        .map_err(|_| Error::Singular("ordinary kriging system".into()))?;
    Ok(sol.iter().take(k).copied().collect())
}

/// Inverse-distance weighting over the nearest `neighborhood` points; exact
/// at zero distance.
pub fn idw_predict<T: Real>(
    known: &[((f64, f64), T)],
    target: (f64, f64),
    power: f64,
    neighborhood: usize,
) -> Result<T> {
    if known.is_empty() {
        return Err(Error::invalid("idw needs at least one known point"));
    }
    if !(power > 0.0) {
        return Err(Error::invalid(format!("power must be positive, got {power}")));
    }
    if neighborhood == 0 {
        return Err(Error::invalid("neighborhood must be at least 1"));
    }
    let mut order: Vec<(usize, f64)> = known
        .iter()
        .enumerate()
        .map(|(i, ((lat, lon), _))| (i, (lat - target.0).powi(2) + (lon - target.1).powi(2)))
        .collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    if order[0].1 == 0.0 {
        return Ok(known[order[0].0].1);
    }
    let k = neighborhood.min(order.len());
    let mut wsum = 0.0f64;
    let mut vsum = 0.0f64;
    for &(i, d2) in order.iter().take(k) {
        let w = d2.sqrt().powf(-power);
        wsum += w;
        vsum += w * known[i].1.to64();
    }
    Ok(T::of(vsum / wsum))
}

/// Observed pixels of a day slice as (center position, value) sites.
pub fn observed_sites<T: Real>(slice: ArrayView2<T>, grid: &GridSpec) -> Vec<((f64, f64), T)> {
    let mut sites = Vec::new();
    for ((r, c), v) in slice.indexed_iter() {
        if !v.is_nan() {
            sites.push((grid.cell_center(r, c), *v));
        }
    }
    sites
}

/// Fill every missing pixel of a day by ordinary kriging from the same day's
/// observed pixels; observed pixels pass through unchanged.
pub fn krige_fill_day<T: Real>(
    slice: ArrayView2<T>,
    grid: &GridSpec,
    model: &VariogramModel,
    neighborhood: usize,
) -> Result<Array2<T>> {
    let known = observed_sites(slice, grid);
    if known.is_empty() {
        return Err(Error::degenerate("day slice has no observed pixels"));
    }
    let missing: Vec<(usize, usize)> = slice
        .indexed_iter()
        .filter_map(|((r, c), v)| v.is_nan().then_some((r, c)))
        .collect();
    let filled: Vec<T> = missing
        .par_iter()
        .map(|&(r, c)| kriging_predict(&known, model, grid.cell_center(r, c), neighborhood).map(|(v, _)| v))
        .collect::<Result<Vec<_>>>()?;
    let mut out = slice.to_owned();
    for (&(r, c), &v) in missing.iter().zip(filled.iter()) {
        out[[r, c]] = v;
    }
    Ok(out)
}

/// Mean of a pixel over the days where it is observed; NaN when never observed.
pub fn temporal_mean<T: Real>(tensor: &MaskedTensor<T>) -> Array2<T> {
    let (days, rows, cols) = tensor.dims();
    Array2::from_shape_fn((rows, cols), |(r, c)| {
        let mut sum = T::zero();
        let mut n = 0usize;
        for d in 0..days {
            if tensor.mask()[[d, r, c]] {
                sum += tensor.values()[[d, r, c]];
                n += 1;
            }
        }
        if n == 0 {
            T::nan()
        } else {
            sum / T::of(n as f64)
        }
    })
}

/// Mean of every observed entry in the tensor.
pub fn global_observed_mean<T: Real>(tensor: &MaskedTensor<T>) -> Result<T> {
    let mut sum = T::zero();
    let mut n = 0usize;
    for (&v, &m) in tensor.values().iter().zip(tensor.mask().iter()) {
        if m {
            sum += v;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::degenerate("tensor has no observed entries"));
    }
    Ok(sum / T::of(n as f64))
}

fn group_entries_by_day(entries: &[(usize, usize, usize)]) -> BTreeMap<usize, Vec<usize>> {
    let mut by_day: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (pos, &(day, _, _)) in entries.iter().enumerate() {
        by_day.entry(day).or_default().push(pos);
    }
    by_day
}

/// Kriging predictions at the listed entries, fitted slice by slice from each
/// entry's own day.
pub fn krige_predict_entries<T: Real>(
    tensor: &MaskedTensor<T>,
    grid: &GridSpec,
    model: &VariogramModel,
    entries: &[(usize, usize, usize)],
    neighborhood: usize,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); entries.len()];
    for (day, positions) in group_entries_by_day(entries) {
        let slice = tensor.values().index_axis(ndarray::Axis(0), day);
        let known = observed_sites(slice, grid);
        if known.is_empty() {
            return Err(Error::degenerate(format!("day {day} has no observed pixels")));
        }
        let predictions: Vec<T> = positions
            .par_iter()
            .map(|&pos| {
                let (_, r, c) = entries[pos];
                kriging_predict(&known, model, grid.cell_center(r, c), neighborhood)
                    .map(|(v, _)| v)
            })
            .collect::<Result<Vec<_>>>()?;
        for (&pos, &v) in positions.iter().zip(predictions.iter()) {
            out[pos] = v;
        }
    }
    Ok(out)
}

/// IDW predictions at the listed entries.
pub fn idw_predict_entries<T: Real>(
    tensor: &MaskedTensor<T>,
    grid: &GridSpec,
    entries: &[(usize, usize, usize)],
    power: f64,
    neighborhood: usize,
) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); entries.len()];
    for (day, positions) in group_entries_by_day(entries) {
        let slice = tensor.values().index_axis(ndarray::Axis(0), day);
        let known = observed_sites(slice, grid);
        if known.is_empty() {
            return Err(Error::degenerate(format!("day {day} has no observed pixels")));
        }
        let predictions: Vec<T> = positions
            .par_iter()
            .map(|&pos| {
                let (_, r, c) = entries[pos];
                idw_predict(&known, grid.cell_center(r, c), power, neighborhood)
            })
            .collect::<Result<Vec<_>>>()?;
        for (&pos, &v) in positions.iter().zip(predictions.iter()) {
            out[pos] = v;
        }
    }
    Ok(out)
}

/// Constant global-mean predictions at the listed entries.
pub fn mean_predict_entries<T: Real>(
    tensor: &MaskedTensor<T>,
    entries: &[(usize, usize, usize)],
) -> Result<Vec<T>> {
    let mean = global_observed_mean(tensor)?;
    Ok(vec![mean; entries.len()])
}
