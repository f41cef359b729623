//! Small dense linear-algebra helpers shared by the estimators.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Reciprocal condition threshold below which a regressor Gram matrix is treated as singular.
pub const GRAM_RCOND_MIN: f64 = 1e-12;

/// Ratio of smallest to largest absolute eigenvalue of a symmetric matrix.
pub fn rcond_sym(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let eig = SymmetricEigen::new(m.clone());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for v in eig.eigenvalues.iter() {
        lo = lo.min(v.abs());
        hi = hi.max(v.abs());
    }
    if hi == 0.0 || !hi.is_finite() {
        0.0
    } else {
        lo / hi
    }
}

/// Ratio of smallest to largest singular value of a general matrix.
pub fn rcond(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.max();
    let lo = sv.min();
    if hi == 0.0 || !hi.is_finite() {
        0.0
    } else {
        lo / hi
    }
}

/// Least-squares fit of every column of `y` on the columns of `x`.
#[derive(Debug, Clone)]
pub struct Ols {
    /// k×m coefficient matrix (column j holds equation j).
    pub coef: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
    /// `x'x`
    pub gram: DMatrix<f64>,
    /// `(x'x)^{-1}`
    pub gram_inv: DMatrix<f64>,
}

pub fn ols(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<Ols> {
    if x.nrows() != y.nrows() {
        return Err(Error::Shape(format!(
            "regressors have {} rows, responses {}",
            x.nrows(),
            y.nrows()
        )));
    }
    if x.nrows() < x.ncols() {
        return Err(Error::InsufficientData(format!(
            "{} rows for {} regressors",
            x.nrows(),
            x.ncols()
        )));
    }
    let gram = x.tr_mul(x);
    let gram_inv = gram_inverse(&gram)?;
    let coef = &gram_inv * x.tr_mul(y);
    let residuals = y - x * &coef;
    Ok(Ols { coef, residuals, gram, gram_inv })
}

/// Inverse of a regressor Gram matrix, rejecting numerically singular ones.
pub fn gram_inverse(gram: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let rc = rcond_sym(gram);
    if !(rc >= GRAM_RCOND_MIN) {
        return Err(Error::SingularRegressors { rcond: rc });
    }
    let inv = gram
        .clone()
        .cholesky()
        .ok_or(Error::SingularRegressors { rcond: rc })?
        .inverse();
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Lower Cholesky factor of a symmetric matrix whose smallest eigenvalue exceeds
/// `1e-10` times its largest.
pub fn chol_lower(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m);
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let eig = SymmetricEigen::new(s.clone());
    let hi = eig.eigenvalues.max();
    let lo = eig.eigenvalues.min();
    if !(hi > 0.0) || lo <= 1e-10 * hi {
        return Err(Error::NotPositiveDefinite);
    }
    let l = s.cholesky().ok_or(Error::NotPositiveDefinite)?.l();
    Ok(l)
}

/// Inverse of a symmetric positive definite matrix.
pub fn spd_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m);
    let inv = s.cholesky().ok_or(Error::NotPositiveDefinite)?.inverse();
    Ok(symmetrize(&inv))
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// Half-vectorisation: stacks the lower triangle column by column.
pub fn vech(m: &DMatrix<f64>) -> DVector<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in j..d {
            out.push(m[(i, j)]);
        }
    }
    DVector::from_vec(out)
}

/// (row, col) pairs in `vech` order.
pub fn vech_pairs(d: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for j in 0..d {
        for i in j..d {
            out.push((i, j));
        }
    }
    out
}

pub fn identity(d: usize) -> DMatrix<f64> {
    DMatrix::identity(d, d)
}

/// Orthonormal basis of the orthogonal complement of the column space of `a` (d×r, full
/// column rank). Columns are sign-normalised so the first non-negligible entry is positive.
pub fn orth_complement(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = a.nrows();
    let r = a.ncols();
    if r >= d {
        return Ok(DMatrix::zeros(d, 0));
    }
    let gram = a.tr_mul(a);
    let gi = spd_inverse(&gram).map_err(|_| Error::RankDeficient("loading matrix".into()))?;
    let proj = identity(d) - a * gi * a.transpose();
    let eig = SymmetricEigen::new(symmetrize(&proj));
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = DMatrix::zeros(d, d - r);
    for (c, &i) in idx.iter().take(d - r).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if let Some(first) = v.iter().find(|x| x.abs() > 1e-12) {
            if *first < 0.0 {
                v = -v;
            }
        }
        out.set_column(c, &v);
    }
    Ok(out)
}

/// Numerical rank of `a` with relative singular-value tolerance `tol`.
pub fn rank(a: &DMatrix<f64>, tol: f64) -> usize {
    if a.nrows() == 0 || a.ncols() == 0 {
        return 0;
    }
    let sv = a.clone().svd(false, false).singular_values;
    let hi = sv.max();
    if hi == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > tol * hi).count()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Linearly interpolated empirical quantile of an ascending-sorted slice (type 7).
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return f64::NAN;
    }
    if n == 1 {
        return sorted[0];
    }
    let pos = prob.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vech_orders_lower_triangle_by_column() {
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0]);
        assert_eq!(vech(&m).as_slice(), &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn complement_is_orthogonal() {
        let a = DMatrix::from_row_slice(3, 1, &[1.0, -2.0, 0.5]);
        let c = orth_complement(&a).unwrap();
        assert_eq!(c.ncols(), 2);
        assert!(max_abs(&(c.transpose() * &a)) < 1e-12);
        assert!(max_abs(&(c.transpose() * &c - identity(2))) < 1e-12);
    }

    #[test]
    fn singular_gram_rejected() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        assert!(matches!(ols(&x, &y), Err(Error::SingularRegressors { .. })));
    }

    #[test]
    fn quantile_interpolates() {
        let s = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(quantile_sorted(&s, 0.5), 1.5);
        assert_eq!(quantile_sorted(&s, 1.0), 3.0);
    }
}
