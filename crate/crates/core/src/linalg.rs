//! Small dense solves shared by the ALS row updates, kriging systems, and the
//! regression behind the ADF test. Systems here are tiny (rank-by-rank or
//! neighborhood-by-neighborhood), so plain LU with partial pivoting is enough.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::real::Real;

/// Solve `a x = b` by LU with partial pivoting; `a` and `b` are consumed as
/// scratch and the solution is returned in place of `b`.
pub fn solve_in_place<T: Real>(a: &mut Array2<T>, b: &mut Array1<T>) -> Result<Array1<T>> {
    let n = a.nrows();
    if a.ncols() != n || b.len() != n {
        return Err(Error::dims(format!(
            "square system expected, got {}x{} with rhs {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    if n == 0 {
        return Ok(Array1::zeros(0));
    }

    // Pivot tolerance scaled by the matrix magnitude so ridge-sized diagonals
    // still count as regular.
    let scale = a.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return Err(Error::Singular("zero matrix".into()));
    }
    let tol = scale * T::epsilon() * T::of(n as f64);

    for col in 0..n {
        let mut piv = col;
        let mut piv_val = a[[col, col]].abs();
        for row in (col + 1)..n {
            let v = a[[row, col]].abs();
            if v > piv_val {
                piv = row;
                piv_val = v;
            }
        }
        if !(piv_val > tol) {
            return Err(Error::Singular(format!("pivot {piv_val} at column {col}")));
        }
        if piv != col {
            for j in 0..n {
                let tmp = a[[col, j]];
                a[[col, j]] = a[[piv, j]];
                a[[piv, j]] = tmp;
            }
            b.swap(col, piv);
        }
        let inv = T::one() / a[[col, col]];
        for row in (col + 1)..n {
            let factor = a[[row, col]] * inv;
            if factor == T::zero() {
                continue;
            }
            a[[row, col]] = T::zero();
            for j in (col + 1)..n {
                let update = factor * a[[col, j]];
                a[[row, j]] -= update;
            }
            let update = factor * b[col];
            b[row] -= update;
        }
    }

    for col in (0..n).rev() {
        let mut sum = b[col];
        for j in (col + 1)..n {
            sum = sum - a[[col, j]] * b[j];
        }
        b[col] = sum / a[[col, col]];
    }
    Ok(b.clone())
}

/// Solve `a x = b` without clobbering the inputs.
pub fn solve<T: Real>(a: &Array2<T>, b: &Array1<T>) -> Result<Array1<T>> {
    let mut a = a.clone();
    let mut b = b.clone();
    solve_in_place(&mut a, &mut b)
}

/// Ordinary least squares through the normal equations.
#[derive(Debug, Clone)]
pub struct Ols<T> {
    pub coeffs: Array1<T>,
    pub stderr: Array1<T>,
    pub ssr: T,
    pub nobs: usize,
    pub nparams: usize,
}

impl<T: Real> Ols<T> {
    /// t ratio of coefficient `j`.
    pub fn t_ratio(&self, j: usize) -> T {
        self.coeffs[j] / self.stderr[j]
    }

    pub fn aic(&self) -> T {
        let n = T::of(self.nobs as f64);
        let k = T::of(self.nparams as f64);
        n * (self.ssr / n).ln() + T::of(2.0) * k
    }
}

pub fn ols<T: Real>(x: &Array2<T>, y: &Array1<T>) -> Result<Ols<T>> {
    let n = x.nrows();
    let k = x.ncols();
    if y.len() != n {
        return Err(Error::dims(format!("{n} design rows vs {} responses", y.len())));
    }
    if n <= k {
        return Err(Error::degenerate(format!(
            "need more observations ({n}) than parameters ({k})"
        )));
    }

    let mut xtx = Array2::<T>::zeros((k, k));
    let mut xty = Array1::<T>::zeros(k);
    for row in 0..n {
        for a in 0..k {
            let xa = x[[row, a]];
            xty[a] += xa * y[row];
            for b in a..k {
                xtx[[a, b]] += xa * x[[row, b]];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            xtx[[a, b]] = xtx[[b, a]];
        }
    }

    let coeffs = solve(&xtx, &xty)?;

    let mut ssr = T::zero();
    for row in 0..n {
        let mut fitted = T::zero();
        for a in 0..k {
            fitted += x[[row, a]] * coeffs[a];
        }
        let resid = y[row] - fitted;
        ssr += resid * resid;
    }

    let sigma2 = ssr / T::of((n - k) as f64);
    let mut stderr = Array1::<T>::zeros(k);
    for j in 0..k {
        let mut e = Array1::<T>::zeros(k);
        e[j] = T::one();
        let col = solve(&xtx, &e)?;
        stderr[j] = (sigma2 * col[j]).sqrt();
    }

    Ok(Ols { coeffs, stderr, ssr, nobs: n, nparams: k })
}
