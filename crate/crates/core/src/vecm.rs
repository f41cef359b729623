//! Error-correction form of a VAR and the permanent–transitory decomposition.

use nalgebra::{DMatrix, DVector};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::linalg::{self, orth_complement, rank};
use crate::var::VarModel;

/// `Δy_t = ν + Π y_{t−1} + Σ_{i=1}^{p−1} Γ_i Δy_{t−i} + u_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VecmModel {
    pub pi: DMatrix<f64>,
    pub gammas: Vec<DMatrix<f64>>,
    pub intercept: Option<DVector<f64>>,
    pub sigma_u: DMatrix<f64>,
    /// Loading/cointegration factor pair with `Π = αβ'`, when supplied.
    pub factors: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl VecmModel {
    pub fn dim(&self) -> usize {
        self.pi.nrows()
    }

    /// Attaches `(α, β)` after checking that they are full rank and reproduce Π.
    pub fn with_factors(mut self, alpha: DMatrix<f64>, beta: DMatrix<f64>) -> Result<Self> {
        check_factors(&alpha, &beta)?;
        if alpha.nrows() != self.dim() {
            return Err(Error::Shape("factor rows must equal d".into()));
        }
        let gap = (&self.pi - &alpha * beta.transpose()).norm();
        if gap >= 1e-10 {
            return Err(Error::InvalidArgument(format!("‖Π − αβ'‖ = {gap:e}")));
        }
        self.factors = Some((alpha, beta));
        Ok(self)
    }
}

pub fn var_to_vecm(m: &VarModel) -> Result<VecmModel> {
    if m.p == 0 {
        return Err(Error::InvalidOrder("error-correction form needs p ≥ 1".into()));
    }
    let d = m.dim();
    let pi = m.coeffs.iter().fold(-DMatrix::identity(d, d), |acc, a| acc + a);
    let gammas = (1..m.p)
        .map(|i| -m.coeffs[i..].iter().fold(DMatrix::zeros(d, d), |acc, a| acc + a))
        .collect();
    Ok(VecmModel { pi, gammas, intercept: m.intercept.clone(), sigma_u: m.sigma_u.clone(), factors: None })
}

pub fn vecm_to_var(v: &VecmModel) -> Result<VarModel> {
    let d = v.dim();
    if v.pi.ncols() != d || v.gammas.iter().any(|g| g.shape() != (d, d)) || v.sigma_u.shape() != (d, d) {
        return Err(Error::Shape("VECM matrices must all be d×d".into()));
    }
    let p = v.gammas.len() + 1;
    let mut coeffs = Vec::with_capacity(p);
    let eye = DMatrix::identity(d, d);
    if p == 1 {
        coeffs.push(&eye + &v.pi);
    } else {
        coeffs.push(&eye + &v.pi + &v.gammas[0]);
        for i in 1..p - 1 {
            coeffs.push(&v.gammas[i] - &v.gammas[i - 1]);
        }
        coeffs.push(-&v.gammas[p - 2]);
    }
    VarModel::from_parts(coeffs, v.intercept.clone(), v.sigma_u.clone())
}

fn check_factors(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<()> {
    if alpha.shape() != beta.shape() {
        return Err(Error::Shape("α and β must have the same shape".into()));
    }
    let (d, r) = alpha.shape();
    if r == 0 || r >= d {
        return Err(Error::RankDeficient(format!("cointegration rank {r} must lie strictly between 0 and {d}")));
    }
    if rank(alpha, 1e-10) < r {
        return Err(Error::RankDeficient("α".into()));
    }
    if rank(beta, 1e-10) < r {
        return Err(Error::RankDeficient("β".into()));
    }
    Ok(())
}

fn checked_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let rc = linalg::rcond(&m);
    if rc <= 1e-10 {
        return Err(Error::NonInvertibleLoading(format!("{what} (reciprocal condition {rc:e})")));
    }
    m.try_inverse().ok_or_else(|| Error::NonInvertibleLoading(what.into()))
}

/// `(β⊥(α⊥'β⊥)^{-1}α⊥', α(β'α)^{-1}β')`, which sum to the identity.
pub fn loading_projectors(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_factors(alpha, beta)?;
    let a_perp = orth_complement(alpha)?;
    let b_perp = orth_complement(beta)?;
    let permanent = &b_perp * checked_inverse(a_perp.tr_mul(&b_perp), "α⊥'β⊥")? * a_perp.transpose();
    let transitory = alpha * checked_inverse(beta.tr_mul(alpha), "β'α")? * beta.transpose();
    Ok((permanent, transitory))
}

/// Common-trends loading `C = β⊥(α⊥'β⊥)^{-1}α⊥'`; `Cα = 0` and `β'C = 0`.
#[allow(non_snake_case)]
pub fn longrun_C(alpha: &DMatrix<f64>, beta: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    loading_projectors(alpha, beta).map(|(c, _)| c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PermanentTransitory {
    pub permanent: DMatrix<f64>,
    pub transitory: DMatrix<f64>,
    pub permanent_loading: DMatrix<f64>,
    pub transitory_loading: DMatrix<f64>,
}

pub fn gg_decompose(alpha: &DMatrix<f64>, beta: &DMatrix<f64>, ds: &TimeSeriesDataset) -> Result<PermanentTransitory> {
    if alpha.nrows() != ds.dim() {
        return Err(Error::Shape(format!("loadings have {} rows, data {} columns", alpha.nrows(), ds.dim())));
    }
    let (pl, tl) = loading_projectors(alpha, beta)?;
    let y = ds.values();
    Ok(PermanentTransitory {
        permanent: y * pl.transpose(),
        transitory: y * tl.transpose(),
        permanent_loading: pl,
        transitory_loading: tl,
    })
}
