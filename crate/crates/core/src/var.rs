//! Least-squares VAR(p) estimation and the reduced-form machinery built on it:
//! companion form, stability, MA(∞) coefficients, asymptotic covariance,
//! iterated forecasts and Granger-causality Wald tests.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::linalg::{self, ols};
use crate::stats::TestResult;

/// Reduced-form VAR(p): `y_t = ν + A_1 y_{t-1} + … + A_p y_{t-p} + u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub p: usize,
    pub intercept: Option<DVector<f64>>,
    /// `A_1..A_p`, each d×d.
    pub coeffs: Vec<DMatrix<f64>>,
    /// (T−p)×d residual matrix; empty for models assembled from parameters.
    pub residuals: DMatrix<f64>,
    /// Residual covariance with divisor T−p.
    pub sigma_u: DMatrix<f64>,
    pub nobs_effective: usize,
    /// `Z'Z` for the stacked regressor `(1, y_{t-1}', …, y_{t-p}')'`, intercept first when present.
    pub regressor_gram: Option<DMatrix<f64>>,
}

impl VarModel {
    /// Model assembled from known parameters (no sample attached).
    pub fn from_parts(coeffs: Vec<DMatrix<f64>>, intercept: Option<DVector<f64>>, sigma_u: DMatrix<f64>) -> Result<Self> {
        let d = sigma_u.nrows();
        if sigma_u.ncols() != d || d == 0 {
            return Err(Error::Shape("sigma_u must be square and non-empty".into()));
        }
        if coeffs.iter().any(|a| a.shape() != (d, d)) {
            return Err(Error::Shape("every lag matrix must be d×d".into()));
        }
        if intercept.as_ref().is_some_and(|v| v.len() != d) {
            return Err(Error::Shape("intercept must have length d".into()));
        }
        Ok(Self {
            p: coeffs.len(),
            intercept,
            coeffs,
            residuals: DMatrix::zeros(0, d),
            sigma_u: linalg::symmetrize(&sigma_u),
            nobs_effective: 0,
            regressor_gram: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.sigma_u.nrows()
    }

    /// `[A_1 … A_p]` as a d×dp matrix.
    pub fn lag_matrix(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut out = DMatrix::zeros(d, d * self.p);
        for (j, a) in self.coeffs.iter().enumerate() {
            out.view_mut((0, j * d), (d, d)).copy_from(a);
        }
        out
    }

    /// `vec([A_1 … A_p])`, column-major.
    pub fn beta(&self) -> DVector<f64> {
        let m = self.lag_matrix();
        DVector::from_column_slice(m.as_slice())
    }

    /// `A(1) = I − Σ A_j`.
    pub fn a_of_one(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.coeffs.iter().fold(DMatrix::identity(d, d), |acc, a| acc - a)
    }

    fn require_gram(&self) -> Result<&DMatrix<f64>> {
        self.regressor_gram
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("model carries no sample moments".into()))
    }

    /// `(Z'Z)^{-1}` restricted to the lag regressors (intercept row/column removed).
    pub fn lag_gram_inverse(&self) -> Result<DMatrix<f64>> {
        let gram = self.require_gram()?;
        let inv = linalg::gram_inverse(gram)?;
        let off = usize::from(self.intercept.is_some());
        let k = self.dim() * self.p;
        Ok(inv.view((off, off), (k, k)).into_owned())
    }
}

/// Stacked regressors and targets for rows `start..T` of `values`.
pub(crate) fn design(values: &DMatrix<f64>, p: usize, intercept: bool, start: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let t = values.nrows();
    let d = values.ncols();
    let n = t - start;
    let k = d * p + usize::from(intercept);
    let off = usize::from(intercept);
    let mut x = DMatrix::zeros(n, k);
    let mut y = DMatrix::zeros(n, d);
    for r in 0..n {
        let tt = start + r;
        if intercept {
            x[(r, 0)] = 1.0;
        }
        for j in 0..p {
            for c in 0..d {
                x[(r, off + j * d + c)] = values[(tt - j - 1, c)];
            }
        }
        for c in 0..d {
            y[(r, c)] = values[(tt, c)];
        }
    }
    (x, y)
}

/// Equation-by-equation least squares on rows `p..T`.
pub fn fit_var(ds: &TimeSeriesDataset, p: usize, intercept: bool) -> Result<VarModel> {
    fit_var_from(ds.values(), p, intercept, p)
}

/// Least squares using targets `start..T` (`start ≥ p`), so fits at different orders can
/// share a common sample.
pub fn fit_var_from(values: &DMatrix<f64>, p: usize, intercept: bool, start: usize) -> Result<VarModel> {
    let t = values.nrows();
    let d = values.ncols();
    if start < p {
        return Err(Error::InvalidArgument(format!("sample start {start} precedes lag order {p}")));
    }
    let k = d * p + usize::from(intercept);
    if t <= start || t - start <= k {
        return Err(Error::InsufficientData(format!(
            "{} usable rows for {} regressors per equation",
            t.saturating_sub(start),
            k
        )));
    }
    let n = t - start;
    let (x, y) = design(values, p, intercept, start);
    let (coef, residuals, gram) = if k == 0 {
        (DMatrix::zeros(0, d), y, DMatrix::zeros(0, 0))
    } else {
        let fit = ols(&x, &y)?;
        (fit.coef, fit.residuals, fit.gram)
    };
    let off = usize::from(intercept);
    let intercept_vec = intercept.then(|| DVector::from_iterator(d, coef.row(0).iter().copied()));
    let coeffs = (0..p)
        .map(|j| coef.rows(off + j * d, d).transpose())
        .collect::<Vec<_>>();
    let sigma_u = linalg::symmetrize(&(residuals.tr_mul(&residuals) / n as f64));
    Ok(VarModel {
        p,
        intercept: intercept_vec,
        coeffs,
        residuals,
        sigma_u,
        nobs_effective: n,
        regressor_gram: Some(gram),
    })
}

/// dp×dp companion matrix with eigenvalues and spectral radius.
#[derive(Debug, Clone)]
pub struct CompanionMatrix {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: Vec<Complex<f64>>,
    pub spectral_radius: f64,
}

pub fn companion_matrix(coeffs: &[DMatrix<f64>]) -> DMatrix<f64> {
    let p = coeffs.len();
    let d = coeffs[0].nrows();
    let mut m = DMatrix::zeros(d * p, d * p);
    for (j, a) in coeffs.iter().enumerate() {
        m.view_mut((0, j * d), (d, d)).copy_from(a);
    }
    for j in 1..p {
        for i in 0..d {
            m[(j * d + i, (j - 1) * d + i)] = 1.0;
        }
    }
    m
}

pub fn companion(m: &VarModel) -> Result<CompanionMatrix> {
    if m.p == 0 {
        return Err(Error::InvalidOrder("companion form needs p ≥ 1".into()));
    }
    let matrix = companion_matrix(&m.coeffs);
    let eigenvalues: Vec<Complex<f64>> = matrix.clone().complex_eigenvalues().iter().copied().collect();
    let spectral_radius = eigenvalues.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(CompanionMatrix { matrix, eigenvalues, spectral_radius })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StabilityReport {
    pub stable: bool,
    pub spectral_radius: f64,
    /// Within `tol` of the unit circle.
    pub boundary: bool,
    /// (re, im) pairs.
    pub eigenvalues: Vec<(f64, f64)>,
}

pub const DEFAULT_STABILITY_TOL: f64 = 1e-8;

/// Stability verdict from the companion eigenvalues: stable iff ρ ≤ 1 − tol.
pub fn check_stability(m: &VarModel, tol: f64) -> Result<StabilityReport> {
    let c = companion(m)?;
    let rho = c.spectral_radius;
    Ok(StabilityReport {
        stable: rho <= 1.0 - tol,
        spectral_radius: rho,
        boundary: (rho - 1.0).abs() < tol,
        eigenvalues: c.eigenvalues.iter().map(|z| (z.re, z.im)).collect(),
    })
}

/// `Φ_0 = I`, `Φ_i = Σ_{j=1}^{min(i,p)} A_j Φ_{i−j}` for i = 0..=H.
pub fn ma_coefficients(m: &VarModel, horizon: usize) -> Vec<DMatrix<f64>> {
    ma_from_coeffs(&m.coeffs, m.dim(), horizon)
}

pub fn ma_from_coeffs(coeffs: &[DMatrix<f64>], d: usize, horizon: usize) -> Vec<DMatrix<f64>> {
    let mut phi: Vec<DMatrix<f64>> = Vec::with_capacity(horizon + 1);
    phi.push(DMatrix::identity(d, d));
    for i in 1..=horizon {
        let mut acc = DMatrix::zeros(d, d);
        for j in 1..=i.min(coeffs.len()) {
            acc += &coeffs[j - 1] * &phi[i - j];
        }
        phi.push(acc);
    }
    phi
}

/// `Γ̂^{-1} ⊗ Σ̂_u` for `vec([A_1 … A_p])`, with `Γ̂ = Z'Z / (T−p)`.
pub fn asymptotic_cov(m: &VarModel) -> Result<DMatrix<f64>> {
    let ginv = m.lag_gram_inverse()? * m.nobs_effective as f64;
    Ok(linalg::kron(&linalg::symmetrize(&ginv), &m.sigma_u))
}

/// Iterated forecasts; `last_obs` rows run oldest to newest.
pub fn forecast_iterated(m: &VarModel, last_obs: &DMatrix<f64>, h: usize) -> Result<DMatrix<f64>> {
    let d = m.dim();
    if h == 0 {
        return Err(Error::InvalidArgument("forecast horizon must be ≥ 1".into()));
    }
    if last_obs.ncols() != d || last_obs.nrows() < m.p {
        return Err(Error::Shape(format!(
            "need at least {}×{} initial observations, got {}×{}",
            m.p,
            d,
            last_obs.nrows(),
            last_obs.ncols()
        )));
    }
    // history[0] is the newest observation
    let mut history: Vec<DVector<f64>> = (0..m.p)
        .map(|j| last_obs.row(last_obs.nrows() - 1 - j).transpose())
        .collect();
    let mut out = DMatrix::zeros(h, d);
    for step in 0..h {
        let mut next = m.intercept.clone().unwrap_or_else(|| DVector::zeros(d));
        for (j, a) in m.coeffs.iter().enumerate() {
            next += a * &history[j];
        }
        out.set_row(step, &next.transpose());
        if m.p > 0 {
            history.pop();
            history.insert(0, next);
        }
    }
    Ok(out)
}

/// Wald test that every lag of the `cause` variables is absent from the `effect` equations;
/// χ² with |cause|·|effect|·p degrees of freedom.
pub fn granger_wald(m: &VarModel, cause: &[usize], effect: &[usize]) -> Result<TestResult> {
    let d = m.dim();
    if cause.is_empty() || effect.is_empty() {
        return Err(Error::EmptySelection);
    }
    if m.p == 0 {
        return Err(Error::InvalidOrder("Granger test needs p ≥ 1".into()));
    }
    if cause.iter().chain(effect).any(|&i| i >= d) {
        return Err(Error::InvalidArgument("variable index out of range".into()));
    }
    if cause.iter().any(|c| effect.contains(c)) {
        return Err(Error::InvalidArgument("cause and effect sets overlap".into()));
    }
    let mut idx = Vec::new();
    for j in 0..m.p {
        for &c in cause {
            for &e in effect {
                idx.push((j * d + c) * d + e);
            }
        }
    }
    wald_subset(m, &idx)
}

/// Wald statistic for `vec([A_1 … A_p])[idx] = 0` using `(Z'Z)^{-1} ⊗ Σ̂_u`.
pub(crate) fn wald_subset(m: &VarModel, idx: &[usize]) -> Result<TestResult> {
    let d = m.dim();
    let ginv = m.lag_gram_inverse()?;
    let beta = m.beta();
    let q = idx.len();
    let b = DVector::from_iterator(q, idx.iter().map(|&i| beta[i]));
    let v = DMatrix::from_fn(q, q, |r, c| {
        let (i, j) = (idx[r], idx[c]);
        ginv[(i / d, j / d)] * m.sigma_u[(i % d, j % d)]
    });
    if b.iter().all(|x| *x == 0.0) {
        return Ok(TestResult::chi2(0.0, q));
    }
    let vinv = linalg::spd_inverse(&v).map_err(|_| Error::SingularRegressors { rcond: linalg::rcond_sym(&v) })?;
    let stat = (b.transpose() * vinv * &b)[(0, 0)];
    Ok(TestResult::chi2(stat, q))
}
