//! Local projections: direct regressions of `y_{t+h}` on the impulse at t with lagged controls.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::dynamics::ImpulseResponseSet;
use crate::error::{Error, Result};
use crate::linalg::ols;
use crate::stats::normal_quantile;

#[derive(Debug, Clone, PartialEq)]
pub enum Impulse {
    /// All variables at t enter as impulses (coefficients on `y_t`).
    Variables,
    /// An external shock series; `series[i]` belongs to dataset row `offset + i`.
    Shock { series: DVector<f64>, offset: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpEstimate {
    pub horizon: usize,
    pub lags: usize,
    pub response: usize,
    /// Coefficients on the impulse regressors (d for `Variables`, 1 for a shock).
    pub beta: Vec<f64>,
    /// Newey–West standard errors, Bartlett window of `horizon` lags.
    pub se: Vec<f64>,
    pub nobs: usize,
}

/// Newey–West covariance of OLS coefficients with Bartlett weights `1 − l/(bandwidth+1)`.
pub(crate) fn newey_west(x: &DMatrix<f64>, resid: &DVector<f64>, gram_inv: &DMatrix<f64>, bandwidth: usize) -> DMatrix<f64> {
    let (n, k) = x.shape();
    let mut scores = x.clone();
    for t in 0..n {
        for c in 0..k {
            scores[(t, c)] *= resid[t];
        }
    }
    let mut s = scores.tr_mul(&scores);
    for l in 1..=bandwidth.min(n.saturating_sub(1)) {
        let w = 1.0 - l as f64 / (bandwidth as f64 + 1.0);
        let lead = scores.rows(l, n - l);
        let lag = scores.rows(0, n - l);
        let g = lead.tr_mul(&lag);
        s += (&g + g.transpose()) * w;
    }
    gram_inv * s * gram_inv
}

/// Regressors `[1, impulse_t, y_{t−1}, …, y_{t−p}]`, target `y_{response, t+h}`, and the
/// impulse block width.
pub(crate) fn lp_design(
    ds: &TimeSeriesDataset,
    h: usize,
    p: usize,
    response: usize,
    impulse: &Impulse,
) -> Result<(DMatrix<f64>, DMatrix<f64>, usize)> {
    let t_len = ds.nobs();
    let d = ds.dim();
    if response >= d {
        return Err(Error::InvalidArgument(format!("response index {response} out of range")));
    }
    if t_len <= h + p + d * p + 2 {
        return Err(Error::InsufficientData(format!("{t_len} observations for h = {h}, p = {p}, d = {d}")));
    }
    let y = ds.values();
    // admissible t: lags available, lead in sample, shock observed
    let (mut first, mut last) = (p, t_len - 1 - h);
    let nimp = match impulse {
        Impulse::Variables => d,
        Impulse::Shock { series, offset } => {
            if series.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain("shock series contains non-finite values".into()));
            }
            if series.is_empty() {
                return Err(Error::Shape("empty shock series".into()));
            }
            first = first.max(*offset);
            last = last.min(offset + series.len() - 1);
            1
        }
    };
    if last < first {
        return Err(Error::InsufficientData("no overlapping observations".into()));
    }
    let n = last - first + 1;
    let k = 1 + nimp + d * p;
    if n <= k {
        return Err(Error::InsufficientData(format!("{n} usable rows for {k} regressors")));
    }
    let mut x = DMatrix::zeros(n, k);
    let mut target = DMatrix::zeros(n, 1);
    for r in 0..n {
        let t = first + r;
        x[(r, 0)] = 1.0;
        match impulse {
            Impulse::Variables => {
                for j in 0..d {
                    x[(r, 1 + j)] = y[(t, j)];
                }
            }
            Impulse::Shock { series, offset } => x[(r, 1)] = series[t - offset],
        }
        for lag in 1..=p {
            for j in 0..d {
                x[(r, 1 + nimp + (lag - 1) * d + j)] = y[(t - lag, j)];
            }
        }
        target[(r, 0)] = y[(t + h, response)];
    }
    Ok((x, target, nimp))
}

pub fn fit_lp(ds: &TimeSeriesDataset, h: usize, p: usize, response: usize, impulse: &Impulse) -> Result<LpEstimate> {
    let (x, target, nimp) = lp_design(ds, h, p, response, impulse)?;
    let n = x.nrows();
    let fit = ols(&x, &target)?;
    let resid = fit.residuals.column(0).into_owned();
    let cov = newey_west(&x, &resid, &fit.gram_inv, h);
    Ok(LpEstimate {
        horizon: h,
        lags: p,
        response,
        beta: (0..nimp).map(|j| fit.coef[(1 + j, 0)]).collect(),
        se: (0..nimp).map(|j| cov[(1 + j, 1 + j)].max(0.0).sqrt()).collect(),
        nobs: n,
    })
}

/// Responses of every variable to a shock series for h = 0..=H, with pointwise 95% bands
/// from the Newey–West standard errors.
pub fn lp_irf(ds: &TimeSeriesDataset, max_h: usize, p: usize, series: &DVector<f64>, offset: usize) -> Result<ImpulseResponseSet> {
    let d = ds.dim();
    let impulse = Impulse::Shock { series: series.clone(), offset };
    let fits: Vec<Vec<LpEstimate>> = (0..=max_h)
        .into_par_iter()
        .map(|h| (0..d).map(|i| fit_lp(ds, h, p, i, &impulse)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let z = normal_quantile(0.975);
    let col = |f: &dyn Fn(&LpEstimate) -> f64| -> Vec<DMatrix<f64>> {
        fits.iter().map(|row| DMatrix::from_iterator(d, 1, row.iter().map(f))).collect()
    };
    let theta = col(&|e| e.beta[0]);
    let lower = col(&|e| e.beta[0] - z * e.se[0]);
    let upper = col(&|e| e.beta[0] + z * e.se[0]);
    let mut set = ImpulseResponseSet::new(theta, vec!["shock".into()]);
    set.lower = Some(lower);
    set.upper = Some(upper);
    Ok(set)
}
