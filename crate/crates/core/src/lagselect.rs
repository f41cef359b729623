//! Lag-order selection by information criteria and by general-to-specific sequential Wald tests.

use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::stats::chi2_quantile;
use crate::var::{fit_var_from, wald_subset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcRow {
    pub p: usize,
    pub log_det_sigma: f64,
    pub aic: f64,
    pub bic: f64,
    pub hqc: f64,
}

/// Criteria for p = 0..=pmax, all evaluated on the common sample of rows pmax..T.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IcTable {
    pub rows: Vec<IcRow>,
    pub nobs: usize,
    pub best_aic: usize,
    pub best_bic: usize,
    pub best_hqc: usize,
}

impl IcTable {
    pub(crate) fn from_rows(rows: Vec<IcRow>, nobs: usize) -> Self {
        let argmin = |f: fn(&IcRow) -> f64| {
            rows.iter()
                .min_by(|a, b| f(a).total_cmp(&f(b)).then(a.p.cmp(&b.p)))
                .map(|r| r.p)
                .unwrap_or(0)
        };
        let best_aic = argmin(|r| r.aic);
        let best_bic = argmin(|r| r.bic);
        let best_hqc = argmin(|r| r.hqc);
        Self { rows, nobs, best_aic, best_bic, best_hqc }
    }
}

/// Penalty weights per free lag parameter: (AIC, BIC, HQC).
pub(crate) fn penalties(n: usize) -> (f64, f64, f64) {
    let n = n as f64;
    (2.0 / n, n.ln() / n, 2.0 * n.ln().ln() / n)
}

pub fn ic_table(ds: &TimeSeriesDataset, pmax: usize, intercept: bool) -> Result<IcTable> {
    let d = ds.dim();
    let values = ds.values();
    let mut rows = Vec::with_capacity(pmax + 1);
    let mut nobs = 0;
    for p in 0..=pmax {
        let m = fit_var_from(values, p, intercept, pmax)?;
        nobs = m.nobs_effective;
        let det = m.sigma_u.determinant();
        if !(det > 0.0) {
            return Err(Error::SingularRegressors { rcond: 0.0 });
        }
        let ld = det.ln();
        let k = (d * d * p) as f64;
        let (wa, wb, wh) = penalties(nobs);
        rows.push(IcRow { p, log_det_sigma: ld, aic: ld + wa * k, bic: ld + wb * k, hqc: ld + wh * k });
    }
    Ok(IcTable::from_rows(rows, nobs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaldStep {
    pub p: usize,
    pub statistic: f64,
    pub critical_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedLag {
    pub p_hat: usize,
    /// Steps in the order they were evaluated (pmax downward); stops at the first significant one.
    pub trace: Vec<WaldStep>,
}

/// General-to-specific selection: descending from `pmax`, the first order whose last-lag block
/// is jointly significant (χ²_{d²} at level `alpha`) is chosen, otherwise 0.
pub fn sequential_wald(ds: &TimeSeriesDataset, pmax: usize, alpha: f64) -> Result<SelectedLag> {
    let d = ds.dim();
    if pmax == 0 {
        return Err(Error::InvalidArgument("pmax must be ≥ 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument("alpha must lie in (0, 1)".into()));
    }
    if ds.nobs() < pmax * d + 10 {
        return Err(Error::InsufficientData(format!(
            "{} observations for pmax = {pmax}, d = {d}",
            ds.nobs()
        )));
    }
    let crit = chi2_quantile(1.0 - alpha, (d * d) as f64);
    let mut trace = Vec::new();
    for j in (1..=pmax).rev() {
        let m = fit_var_from(ds.values(), j, true, pmax)?;
        let idx: Vec<usize> = (0..d * d).map(|k| (j - 1) * d * d + k).collect();
        let w = wald_subset(&m, &idx)?;
        let significant = w.statistic > crit;
        trace.push(WaldStep { p: j, statistic: w.statistic, critical_value: crit, significant });
        if significant {
            return Ok(SelectedLag { p_hat: j, trace });
        }
    }
    Ok(SelectedLag { p_hat: 0, trace })
}
