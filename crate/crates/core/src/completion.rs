//! Masked CP-ALS: per-row least-squares updates, sweep orchestration,
//! convergence tracking, and imputation of missing entries.
//!
//! Each sweep updates the three factor matrices in mode order 1, 2, 3. The
//! mode-`i` update splits into `I_i` independent problems, one per row of the
//! mode-`i` unfolding: minimize `‖diag(p_j)(x_j − G α)‖² + ridge·‖α‖²` where
//! `G` is the weight-scaled Khatri-Rao companion of the other two factors.
//! Rows solve against the masked normal equations `(G_pᵀG_p + ridge·I) α =
//! G_pᵀ x_p`; the companion rows are generated on the fly from the factor
//! rows so no unfolding is ever materialized.

use std::time::Instant;

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::solve_in_place;
use crate::real::Real;
use crate::tensor::{KruskalModel, MaskedTensor};

/// Factor initialization distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    RandomUniform,
    RandomGaussian,
}

impl std::str::FromStr for InitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-uniform" | "uniform" => Ok(InitKind::RandomUniform),
            "random-gaussian" | "gaussian" => Ok(InitKind::RandomGaussian),
            other => Err(Error::invalid(format!("unknown init kind '{other}'"))),
        }
    }
}

/// Solver configuration. Accepted verbatim from CLI flags or from a flat
/// `key=value` config file with keys rank, max_sweeps, tol, ridge, seed, init.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub rank: usize,
    pub max_sweeps: usize,
    /// Early-stop threshold on the relative change of the masked residual.
    pub tol: f64,
    /// Tikhonov term added to every row's normal equations.
    pub ridge: f64,
    pub seed: u64,
    pub init: InitKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            rank: 8,
            max_sweeps: 50,
            tol: 1e-6,
            ridge: 1e-10,
            seed: 0,
            init: InitKind::RandomUniform,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        if self.max_sweeps == 0 {
            return Err(Error::invalid("max_sweeps must be at least 1"));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::invalid("tol must be nonnegative"));
        }
        if !(self.ridge >= 0.0) {
            return Err(Error::invalid("ridge must be nonnegative"));
        }
        Ok(())
    }

    /// Parse a flat `key=value` config body; later keys override earlier ones,
    /// `#` starts a comment.
    pub fn from_key_values(body: &str) -> Result<Self> {
        let mut cfg = SolverConfig::default();
        for (lineno, raw) in body.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("config line {}: expected key=value", lineno + 1)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| Error::invalid(format!("config line {}: {e}", lineno + 1));
            match key {
                "rank" => cfg.rank = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "max_sweeps" => {
                    cfg.max_sweeps = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?
                }
                "tol" => cfg.tol = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "ridge" => cfg.ridge = value.parse().map_err(|e: std::num::ParseFloatError| bad(e.to_string()))?,
                "seed" => cfg.seed = value.parse().map_err(|e: std::num::ParseIntError| bad(e.to_string()))?,
                "init" => cfg.init = value.parse()?,
                other => return Err(bad(format!("unknown key '{other}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxSweeps,
}

/// Per-sweep fit diagnostics.
///
/// Wall times are kept out of the serialized form so that persisted traces
/// replay byte-identically.
#[derive(Debug, Clone, Serialize)]
pub struct FitTrace {
    /// Masked residual of the initial model, before any sweep.
    pub initial_residual: f64,
    /// Σ_i ‖A_i‖²_F of the initial model.
    pub initial_factor_penalty: f64,
    /// Masked residual ‖(X − X̂)⊙P‖_F after each sweep.
    pub residuals: Vec<f64>,
    /// Σ_i ‖A_i‖²_F after each sweep, taken before column renormalization.
    pub factor_penalties: Vec<f64>,
    #[serde(skip)]
    pub sweep_seconds: Vec<f64>,
    /// Count of row solves skipped because the row had no observed entry.
    pub empty_row_solves: usize,
    pub termination: Termination,
}

impl FitTrace {
    pub fn sweeps(&self) -> usize {
        self.residuals.len()
    }
}

/// Deterministic factor initialization; λ starts at all ones.
pub fn init_model<T: Real>(
    dims: (usize, usize, usize),
    config: &SolverConfig,
) -> Result<KruskalModel<T>> {
    config.validate()?;
    if dims.0 == 0 || dims.1 == 0 || dims.2 == 0 {
        return Err(Error::invalid(format!("dims must be positive, got {dims:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut draw = |n: usize| -> Array2<T> {
        let data: Vec<T> = (0..n * config.rank)
            .map(|_| match config.init {
                InitKind::RandomUniform => T::of(rng.random::<f64>()),
                InitKind::RandomGaussian => T::of(rng.sample::<f64, _>(StandardNormal)),
            })
            .collect();
        Array2::from_shape_vec((n, config.rank), data).expect("shape matches data")
    };
    let a1 = draw(dims.0);
    let a2 = draw(dims.1);
    let a3 = draw(dims.2);
    KruskalModel::new(Array1::from_elem(config.rank, T::one()), [a1, a2, a3])
}

/// Result of one masked row solve.
#[derive(Debug, Clone)]
pub struct RowSolution<T> {
    pub coeffs: Array1<T>,
    /// Number of observed entries that constrained the solve. Zero means the
    /// row carried no data and the all-zero coefficients are a placeholder.
    pub observed: usize,
}

impl<T> RowSolution<T> {
    pub fn no_data(&self) -> bool {
        self.observed == 0
    }
}

#[inline]
fn accumulate_normal_eqs<T: Real>(m: &mut Array2<T>, b: &mut Array1<T>, g: &[T], x: T) {
    let r = g.len();
    for a in 0..r {
        b[a] += x * g[a];
        for c in a..r {
            m[[a, c]] += g[a] * g[c];
        }
    }
}

fn solve_normal_eqs<T: Real>(
    mut m: Array2<T>,
    mut b: Array1<T>,
    ridge: T,
) -> Result<Array1<T>> {
    let r = m.nrows();
    for a in 0..r {
        for c in 0..a {
            m[[a, c]] = m[[c, a]];
        }
        m[[a, a]] += ridge;
    }
    solve_in_place(&mut m, &mut b)
}

/// argmin_α ‖diag(p)(x − Gα)‖² + ridge·‖α‖², restricted to rows with p = 1.
///
/// A row with no observed entry returns all-zero coefficients flagged through
/// [`RowSolution::observed`]; a singular masked normal matrix with ridge = 0
/// is an error.
pub fn solve_row<T: Real>(
    g: ArrayView2<T>,
    p: ArrayView1<bool>,
    x: ArrayView1<T>,
    ridge: T,
) -> Result<RowSolution<T>> {
    let m_len = g.nrows();
    let rank = g.ncols();
    if p.len() != m_len || x.len() != m_len {
        return Err(Error::dims(format!(
            "G has {m_len} rows but p has {} and x has {}",
            p.len(),
            x.len()
        )));
    }
    if ridge < T::zero() {
        return Err(Error::invalid("ridge must be nonnegative"));
    }
    let mut normal = Array2::<T>::zeros((rank, rank));
    let mut rhs = Array1::<T>::zeros(rank);
    let mut row = vec![T::zero(); rank];
    let mut observed = 0usize;
    for j in 0..m_len {
        if !p[j] {
            continue;
        }
        if !x[j].is_finite() {
            return Err(Error::invalid(format!("non-finite observed value at position {j}")));
        }
        observed += 1;
        for (dst, src) in row.iter_mut().zip(g.row(j)) {
            *dst = *src;
        }
        accumulate_normal_eqs(&mut normal, &mut rhs, &row, x[j]);
    }
    if observed == 0 {
        return Ok(RowSolution { coeffs: Array1::zeros(rank), observed: 0 });
    }
    let coeffs = solve_normal_eqs(normal, rhs, ridge)
        .map_err(|_| Error::Singular("masked normal matrix is singular and ridge = 0".into()))?;
    Ok(RowSolution { coeffs, observed })
}

struct ModeUpdate<T> {
    factor: Array2<T>,
    empty_rows: usize,
}

/// Solve every row of `mode` (0-based) against the current companions.
/// The companion row for an observed entry is built on the fly as
/// `g[r] = (λ_r · A_b[·,r]) · A_c[·,r]`, walking entries in unfolding column
/// order so the accumulation matches [`solve_row`] on a materialized G.
fn update_mode<T: Real>(
    tensor: &MaskedTensor<T>,
    factors: &[Array2<T>; 3],
    weights: &Array1<T>,
    mode: usize,
    ridge: T,
) -> Result<ModeUpdate<T>> {
    let dims = tensor.dims();
    let rank = weights.len();
    let rows = [dims.0, dims.1, dims.2][mode];
    let values = tensor.values();
    let mask = tensor.mask();

    let solved: Vec<Option<Array1<T>>> = (0..rows)
        .into_par_iter()
        .map(|row| -> Result<Option<Array1<T>>> {
            let mut normal = Array2::<T>::zeros((rank, rank));
            let mut rhs = Array1::<T>::zeros(rank);
            let mut g = vec![T::zero(); rank];
            let mut observed = 0usize;

            match mode {
                0 => {
                    let (a2, a3) = (&factors[1], &factors[2]);
                    for k in 0..dims.2 {
                        for j in 0..dims.1 {
                            if mask[[row, j, k]] {
                                observed += 1;
                                for r in 0..rank {
                                    g[r] = (weights[r] * a2[[j, r]]) * a3[[k, r]];
                                }
                                accumulate_normal_eqs(&mut normal, &mut rhs, &g, values[[row, j, k]]);
                            }
                        }
                    }
                }
                1 => {
                    let (a1, a3) = (&factors[0], &factors[2]);
                    for k in 0..dims.2 {
                        for i in 0..dims.0 {
                            if mask[[i, row, k]] {
                                observed += 1;
                                for r in 0..rank {
                                    g[r] = (weights[r] * a1[[i, r]]) * a3[[k, r]];
                                }
                                accumulate_normal_eqs(&mut normal, &mut rhs, &g, values[[i, row, k]]);
                            }
                        }
                    }
                }
                2 => {
                    let (a1, a2) = (&factors[0], &factors[1]);
                    for j in 0..dims.1 {
                        for i in 0..dims.0 {
                            if mask[[i, j, row]] {
                                observed += 1;
                                for r in 0..rank {
                                    g[r] = (weights[r] * a1[[i, r]]) * a2[[j, r]];
                                }
                                accumulate_normal_eqs(&mut normal, &mut rhs, &g, values[[i, j, row]]);
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }

            if observed == 0 {
                return Ok(None);
            }
            let coeffs = solve_normal_eqs(normal, rhs, ridge)
                .map_err(|_| Error::RankDeficientRow { mode: mode + 1, row })?;
            Ok(Some(coeffs))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut factor = factors[mode].clone();
    let mut empty_rows = 0usize;
    for (row, solution) in solved.into_iter().enumerate() {
        match solution {
            Some(coeffs) => factor.row_mut(row).assign(&coeffs),
            // No data: keep the previous factor row so λ normalization is not
            // distorted by injected zeros.
            None => empty_rows += 1,
        }
    }
    Ok(ModeUpdate { factor, empty_rows })
}

/// Diagnostics of a single sweep.
#[derive(Debug, Clone, Copy)]
pub struct SweepStats {
    pub empty_rows: usize,
    /// Σ_i ‖A_i‖²_F before the closing renormalization.
    pub factor_penalty: f64,
}

/// One full ALS sweep: update A₁, A₂, A₃ in order, then renormalize columns
/// into λ.
pub fn als_sweep<T: Real>(
    tensor: &MaskedTensor<T>,
    model: &KruskalModel<T>,
    config: &SolverConfig,
) -> Result<(KruskalModel<T>, SweepStats)> {
    if model.dims() != tensor.dims() {
        return Err(Error::dims(format!(
            "model dims {:?} vs tensor dims {:?}",
            model.dims(),
            tensor.dims()
        )));
    }
    let ridge = T::of(config.ridge);
    let mut factors = model.factors.clone();
    let mut weights = model.weights.clone();
    let mut empty_rows = 0usize;
    for mode in 0..3 {
        let update = update_mode(tensor, &factors, &weights, mode, ridge)?;
        factors[mode] = update.factor;
        empty_rows += update.empty_rows;
        // The updated factor absorbed the scale; from here on λ is implicit.
        weights = Array1::from_elem(model.rank(), T::one());
    }
    let mut next = KruskalModel { weights, factors };
    let factor_penalty = next.factor_squared_norm().to64();
    next.normalize();
    Ok((next, SweepStats { empty_rows, factor_penalty }))
}

/// ‖(X − X̂)⊙P‖_F, accumulated in a fixed order for determinism.
pub fn masked_residual<T: Real>(tensor: &MaskedTensor<T>, model: &KruskalModel<T>) -> T {
    let mut acc = T::zero();
    for (idx, &m) in tensor.mask().indexed_iter() {
        if m {
            let diff = tensor.values()[idx] - model.entry_unchecked(idx.0, idx.1, idx.2);
            acc += diff * diff;
        }
    }
    acc.sqrt()
}

/// Fit a CP model to the observed entries: run sweeps until the relative
/// change of the masked residual drops below `tol` or `max_sweeps` is hit.
pub fn fit<T: Real>(
    tensor: &MaskedTensor<T>,
    config: &SolverConfig,
) -> Result<(KruskalModel<T>, FitTrace)> {
    config.validate()?;
    if tensor.observed_count() == 0 {
        return Err(Error::invalid("tensor has no observed entries"));
    }
    let mut model = init_model::<T>(tensor.dims(), config)?;
    let initial_residual = masked_residual(tensor, &model).to64();
    let mut trace = FitTrace {
        initial_residual,
        initial_factor_penalty: model.factor_squared_norm().to64(),
        residuals: Vec::with_capacity(config.max_sweeps),
        factor_penalties: Vec::with_capacity(config.max_sweeps),
        sweep_seconds: Vec::with_capacity(config.max_sweeps),
        empty_row_solves: 0,
        termination: Termination::MaxSweeps,
    };

    let mut prev = initial_residual;
    for sweep in 0..config.max_sweeps {
        let started = Instant::now();
        let (next, stats) = als_sweep(tensor, &model, config)?;
        model = next;
        let residual = masked_residual(tensor, &model).to64();
        trace.residuals.push(residual);
        trace.factor_penalties.push(stats.factor_penalty);
        trace.sweep_seconds.push(started.elapsed().as_secs_f64());
        trace.empty_row_solves += stats.empty_rows;
        log::debug!("sweep {sweep}: masked residual {residual:.6e}");

        let rel = (prev - residual).abs() / prev.max(f64::MIN_POSITIVE);
        if rel < config.tol {
            trace.termination = Termination::Converged;
            break;
        }
        prev = residual;
    }
    Ok((model, trace))
}

/// Observed entries pass through bit-exactly; missing entries come from the
/// model reconstruction.
pub fn impute<T: Real>(tensor: &MaskedTensor<T>, model: &KruskalModel<T>) -> Result<Array3<T>> {
    if model.dims() != tensor.dims() {
        return Err(Error::dims(format!(
            "model dims {:?} vs tensor dims {:?}",
            model.dims(),
            tensor.dims()
        )));
    }
    let mut out = tensor.values().clone();
    for (idx, &m) in tensor.mask().indexed_iter() {
        if !m {
            out[idx] = model.entry_unchecked(idx.0, idx.1, idx.2);
        }
    }
    Ok(out)
}

/// Model predictions at a list of entries.
pub fn predict_entries<T: Real>(
    model: &KruskalModel<T>,
    entries: &[(usize, usize, usize)],
) -> Result<Vec<T>> {
    entries.iter().map(|&idx| model.reconstruct_entry(idx)).collect()
}
