//! Dense 3-way tensors with explicit observation masks, mode unfoldings,
//! Khatri-Rao products, and the Kruskal-format CP model.
//!
//! Unfolding convention: row `j` of the mode-`i` unfolding holds every entry
//! whose mode-`i` index is `j`; among the two retained modes, the one with
//! the smaller mode number varies fastest along the columns. The companion
//! matrices returned by [`gram_companion`] use the same ordering, so
//! `unfold(reconstruct_full(m), i) == A_i · diag(λ) · G_iᵀ` holds for every
//! mode.

use ndarray::{Array1, Array2, Array3, ArrayView2};

use crate::error::{Error, Result};
use crate::real::Real;

/// Hard cap on dense element counts; above this the planned allocations
/// (values + mask + unfold scratch) stop being realistic on one machine.
const MAX_DENSE_ELEMENTS: u128 = 1 << 33;

/// Validate a shape against the dense storage budget and return its element count.
pub fn checked_element_count(dims: (usize, usize, usize)) -> Result<usize> {
    let n = dims.0 as u128 * dims.1 as u128 * dims.2 as u128;
    if n > MAX_DENSE_ELEMENTS {
        return Err(Error::ResourceLimit { elements: n });
    }
    Ok(n as usize)
}

fn check_mode(mode: usize) -> Result<()> {
    if (1..=3).contains(&mode) {
        Ok(())
    } else {
        Err(Error::invalid(format!("mode must be 1, 2, or 3, got {mode}")))
    }
}

/// Dense 3-way value tensor plus a binary observation mask.
///
/// The mask is authoritative: every missing slot carries NaN in `values`,
/// and a non-finite value in an observed slot is a validation error, so NaN
/// alone never has to disambiguate "missing" from "corrupt".
#[derive(Debug, Clone)]
pub struct MaskedTensor<T> {
    values: Array3<T>,
    mask: Array3<bool>,
}

/// Equal when the masks agree and every observed value matches exactly;
/// missing slots are NaN by invariant and compare as equal.
impl<T: Real> PartialEq for MaskedTensor<T> {
    fn eq(&self, other: &Self) -> bool {
        self.mask == other.mask
            && self
                .values
                .iter()
                .zip(other.values.iter())
                .zip(self.mask.iter())
                .all(|((a, b), &m)| !m || a == b)
    }
}

impl<T: Real> MaskedTensor<T> {
    /// Build from values and an explicit mask. Missing slots are forced to NaN.
    pub fn new(mut values: Array3<T>, mask: Array3<bool>) -> Result<Self> {
        if values.dim() != mask.dim() {
            return Err(Error::dims(format!(
                "values {:?} vs mask {:?}",
                values.dim(),
                mask.dim()
            )));
        }
        checked_element_count(values.dim())?;
        for ((idx, v), &m) in values.indexed_iter_mut().zip(mask.iter()) {
            if m {
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "non-finite value {v} at observed entry {idx:?}"
                    )));
                }
            } else {
                *v = T::nan();
            }
        }
        Ok(Self { values, mask })
    }

    /// Build from values alone; NaN marks missing.
    pub fn from_values(values: Array3<T>) -> Result<Self> {
        let mask = values.mapv(|v| !v.is_nan());
        Self::new(values, mask)
    }

    /// Fully observed tensor.
    pub fn dense(values: Array3<T>) -> Result<Self> {
        let dims = values.dim();
        Self::new(values, Array3::from_elem(dims, true))
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        self.values.dim()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &Array3<T> {
        &self.values
    }

    pub fn mask(&self) -> &Array3<bool> {
        &self.mask
    }

    pub fn is_observed(&self, idx: (usize, usize, usize)) -> bool {
        self.mask[idx]
    }

    /// Observed value at `idx`, or `None` when missing.
    pub fn get(&self, idx: (usize, usize, usize)) -> Option<T> {
        if self.mask[idx] {
            Some(self.values[idx])
        } else {
            None
        }
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn observed_fraction(&self) -> f64 {
        if self.len() == 0 {
            0.0
        } else {
            self.observed_count() as f64 / self.len() as f64
        }
    }

    /// Mark an observed entry missing. Used by the gap-injection routines.
    pub(crate) fn set_missing(&mut self, idx: (usize, usize, usize)) {
        self.mask[idx] = false;
        self.values[idx] = T::nan();
    }

    /// Restore an entry to an observed value.
    pub(crate) fn set_observed(&mut self, idx: (usize, usize, usize), value: T) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::invalid(format!("non-finite restore value at {idx:?}")));
        }
        self.mask[idx] = true;
        self.values[idx] = value;
        Ok(())
    }

    /// Unfold values and mask along `mode` with the shared column convention.
    pub fn unfold(&self, mode: usize) -> Result<(UnfoldedView<T>, Array2<bool>)> {
        let view = unfold(&self.values, mode)?;
        let mask = unfold(&self.mask, mode)?.matrix;
        Ok((view, mask))
    }
}

/// One mode-`i` matricization of a 3-way array.
#[derive(Debug, Clone, PartialEq)]
pub struct UnfoldedView<E> {
    pub mode: usize,
    pub dims: (usize, usize, usize),
    pub matrix: Array2<E>,
}

/// Column index of entry `(i, j, k)` in the mode-`mode` unfolding.
#[inline]
pub(crate) fn unfold_column(
    dims: (usize, usize, usize),
    mode: usize,
    idx: (usize, usize, usize),
) -> usize {
    let (d1, d2, _) = dims;
    let (i, j, k) = idx;
    match mode {
        1 => j + d2 * k,
        2 => i + d1 * k,
        3 => i + d1 * j,
        _ => unreachable!("mode validated"),
    }
}

/// Inverse of [`unfold_column`]: tensor index of `(row, col)`.
#[inline]
fn unfold_index(
    dims: (usize, usize, usize),
    mode: usize,
    row: usize,
    col: usize,
) -> (usize, usize, usize) {
    let (d1, d2, _) = dims;
    match mode {
        1 => (row, col % d2, col / d2),
        2 => (col % d1, row, col / d1),
        3 => (col % d1, col / d1, row),
        _ => unreachable!("mode validated"),
    }
}

/// Matricize a dense 3-way array along `mode`.
pub fn unfold<E: Clone>(values: &Array3<E>, mode: usize) -> Result<UnfoldedView<E>> {
    check_mode(mode)?;
    let dims = values.dim();
    let (d1, d2, d3) = dims;
    let rows = [d1, d2, d3][mode - 1];
    let cols = d1 * d2 * d3 / rows.max(1);
    let matrix = Array2::from_shape_fn((rows, cols), |(r, c)| {
        values[unfold_index(dims, mode, r, c)].clone()
    });
    Ok(UnfoldedView { mode, dims, matrix })
}

/// Rebuild the 3-way array an [`UnfoldedView`] came from.
pub fn fold<E: Clone>(view: &UnfoldedView<E>) -> Result<Array3<E>> {
    check_mode(view.mode)?;
    let dims = view.dims;
    let (d1, d2, d3) = dims;
    let rows = [d1, d2, d3][view.mode - 1];
    let cols = d1 * d2 * d3 / rows.max(1);
    if view.matrix.dim() != (rows, cols) {
        return Err(Error::dims(format!(
            "unfolded matrix {:?} does not match dims {:?} along mode {}",
            view.matrix.dim(),
            dims,
            view.mode
        )));
    }
    let mut out = Vec::with_capacity(d1 * d2 * d3);
    // Fill in tensor row-major order so from_shape_vec is a plain move.
    for i in 0..d1 {
        for j in 0..d2 {
            for k in 0..d3 {
                let row = [i, j, k][view.mode - 1];
                let col = unfold_column(dims, view.mode, (i, j, k));
                out.push(view.matrix[[row, col]].clone());
            }
        }
    }
    Array3::from_shape_vec(dims, out).map_err(|e| Error::dims(e.to_string()))
}

/// Column-wise Kronecker product: column `r` of the result is
/// `kron(left[:, r], right[:, r])`, with the right factor varying fastest.
pub fn khatri_rao<T: Real>(left: ArrayView2<T>, right: ArrayView2<T>) -> Result<Array2<T>> {
    if left.ncols() != right.ncols() {
        return Err(Error::dims(format!(
            "khatri-rao needs equal column counts, got {} and {}",
            left.ncols(),
            right.ncols()
        )));
    }
    let (j, k, r) = (left.nrows(), right.nrows(), left.ncols());
    Ok(Array2::from_shape_fn((j * k, r), |(row, col)| {
        left[[row / k, col]] * right[[row % k, col]]
    }))
}

/// CP model in Kruskal format: weights λ and one factor matrix per mode.
#[derive(Debug, Clone, PartialEq)]
pub struct KruskalModel<T> {
    pub weights: Array1<T>,
    pub factors: [Array2<T>; 3],
}

impl<T: Real> KruskalModel<T> {
    pub fn new(weights: Array1<T>, factors: [Array2<T>; 3]) -> Result<Self> {
        let rank = weights.len();
        if rank == 0 {
            return Err(Error::invalid("rank must be at least 1"));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.ncols() != rank {
                return Err(Error::dims(format!(
                    "factor {} has {} columns, expected rank {rank}",
                    i + 1,
                    f.ncols()
                )));
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("non-finite entry in factor {}", i + 1)));
            }
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite weight"));
        }
        Ok(Self { weights, factors })
    }

    pub fn rank(&self) -> usize {
        self.weights.len()
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (
            self.factors[0].nrows(),
            self.factors[1].nrows(),
            self.factors[2].nrows(),
        )
    }

    #[inline]
    pub(crate) fn entry_unchecked(&self, i: usize, j: usize, k: usize) -> T {
        let mut acc = T::zero();
        for r in 0..self.rank() {
            acc = acc
                + ((self.weights[r] * self.factors[0][[i, r]]) * self.factors[1][[j, r]])
                    * self.factors[2][[k, r]];
        }
        acc
    }

    /// Σ_r λ_r · A₁[i₁,r] · A₂[i₂,r] · A₃[i₃,r].
    pub fn reconstruct_entry(&self, idx: (usize, usize, usize)) -> Result<T> {
        let dims = self.dims();
        if idx.0 >= dims.0 || idx.1 >= dims.1 || idx.2 >= dims.2 {
            return Err(Error::invalid(format!("index {idx:?} out of range for dims {dims:?}")));
        }
        Ok(self.entry_unchecked(idx.0, idx.1, idx.2))
    }

    /// Dense reconstruction at every index. Agrees with [`Self::reconstruct_entry`]
    /// to the last bit because both accumulate the rank-one terms in the same
    /// order with the same grouping.
    pub fn reconstruct_full(&self) -> Result<Array3<T>> {
        let dims = self.dims();
        checked_element_count(dims)?;
        let mut out = Array3::<T>::zeros(dims);
        for r in 0..self.rank() {
            for i in 0..dims.0 {
                let wi = self.weights[r] * self.factors[0][[i, r]];
                for j in 0..dims.1 {
                    let wij = wi * self.factors[1][[j, r]];
                    for k in 0..dims.2 {
                        out[[i, j, k]] = out[[i, j, k]] + wij * self.factors[2][[k, r]];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Rescale every factor column to unit Euclidean norm, folding the scale
    /// into λ, then flip signs so the largest-magnitude entry of each A₁
    /// column is positive (compensated in A₂ so the reconstruction is
    /// unchanged). Columns with zero norm are left as zeros with λ_r = 0.
    pub fn normalize(&mut self) {
        let rank = self.rank();
        for f in &mut self.factors {
            for r in 0..rank {
                let norm = f.column(r).iter().map(|v| *v * *v).sum::<T>().sqrt();
                if norm > T::zero() {
                    f.column_mut(r).mapv_inplace(|v| v / norm);
                    self.weights[r] *= norm;
                } else {
                    self.weights[r] *= T::zero();
                }
            }
        }
        for r in 0..rank {
            let mut best = T::zero();
            let mut best_val = T::zero();
            for &v in self.factors[0].column(r) {
                if v.abs() > best {
                    best = v.abs();
                    best_val = v;
                }
            }
            if best_val < T::zero() {
                self.factors[0].column_mut(r).mapv_inplace(|v| -v);
                self.factors[1].column_mut(r).mapv_inplace(|v| -v);
            }
        }
    }

    /// Σ_i ‖A_i‖²_F, the ridge penalty term of the regularized objective.
    pub fn factor_squared_norm(&self) -> T {
        self.factors
            .iter()
            .map(|f| f.iter().map(|v| *v * *v).sum::<T>())
            .sum()
    }
}

/// Khatri-Rao product of the two factor matrices other than `skip_mode`,
/// ordered to match the unfolding columns: `x_j ≈ G_i · diag(λ) · α_j` row by
/// row on observed entries.
pub fn gram_companion<T: Real>(model: &KruskalModel<T>, skip_mode: usize) -> Result<Array2<T>> {
    check_mode(skip_mode)?;
    let [a1, a2, a3] = &model.factors;
    match skip_mode {
        1 => khatri_rao(a3.view(), a2.view()),
        2 => khatri_rao(a3.view(), a1.view()),
        3 => khatri_rao(a2.view(), a1.view()),
        _ => unreachable!(),
    }
}
