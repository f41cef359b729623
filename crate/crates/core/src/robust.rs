//! Multivariate least trimmed squares for VAR(p), its reweighted refinement and robust
//! lag-order selection.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::lagselect::{penalties, IcRow, IcTable};
use crate::linalg::{self, spd_inverse};
use crate::stats::{chi2_quantile, stream_rng, trimmed_consistency_factor};
use crate::var::{design, fit_var_from, VarModel};

pub const DEFAULT_ALPHA_TRIM: f64 = 0.25;
pub const DEFAULT_DELTA: f64 = 0.01;

/// Settings for the concentration-step subset search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MltsConfig {
    pub starts: usize,
    pub initial_steps: usize,
    pub refine: usize,
    pub max_steps: usize,
    pub seed: u64,
}

impl MltsConfig {
    pub fn new(seed: u64) -> Self {
        Self { starts: 500, initial_steps: 2, refine: 10, max_steps: 200, seed }
    }
}

#[derive(Debug, Clone)]
pub struct RobustVarModel {
    /// Coefficients from the selected subset; residuals cover every effective row and
    /// `sigma_u` is the consistency-corrected scatter.
    pub model: VarModel,
    pub h: usize,
    pub alpha_trim: f64,
    pub c_factor: f64,
    /// Retained effective-sample rows (row i is observation `p + i`), ascending.
    pub subset: Vec<usize>,
    /// Squared Mahalanobis residual distances of every effective row under the trimmed fit.
    pub distances: Vec<f64>,
    pub flagged_outliers: Vec<usize>,
    x: DMatrix<f64>,
    y: DMatrix<f64>,
}

struct SubsetFit {
    coef: DMatrix<f64>,
    scatter: DMatrix<f64>,
    det: f64,
}

/// OLS on the listed rows with scatter divisor `rows.len()`.
fn subset_fit(x: &DMatrix<f64>, y: &DMatrix<f64>, rows: &[usize]) -> Option<SubsetFit> {
    let k = x.ncols();
    let d = y.ncols();
    let mut gram = DMatrix::<f64>::zeros(k, k);
    let mut xty = DMatrix::<f64>::zeros(k, d);
    for &r in rows {
        let xr = x.row(r);
        let yr = y.row(r);
        for a in 0..k {
            let xa = xr[a];
            for b in 0..=a {
                gram[(a, b)] += xa * xr[b];
            }
            for j in 0..d {
                xty[(a, j)] += xa * yr[j];
            }
        }
    }
    for a in 0..k {
        for b in 0..a {
            gram[(b, a)] = gram[(a, b)];
        }
    }
    if linalg::rcond_sym(&gram) < linalg::GRAM_RCOND_MIN {
        return None;
    }
    let coef = gram.cholesky()?.solve(&xty);
    let mut scatter = DMatrix::<f64>::zeros(d, d);
    let mut e = DVector::<f64>::zeros(d);
    for &r in rows {
        for j in 0..d {
            e[j] = y[(r, j)] - x.row(r).dot(&coef.column(j).transpose());
        }
        scatter.ger(1.0, &e, &e, 1.0);
    }
    scatter /= rows.len() as f64;
    let det = scatter.determinant();
    (det > 0.0 && det.is_finite()).then_some(SubsetFit { coef, scatter, det })
}

/// Squared Mahalanobis distances of every row's residual.
fn distances(x: &DMatrix<f64>, y: &DMatrix<f64>, coef: &DMatrix<f64>, scatter: &DMatrix<f64>) -> Option<Vec<f64>> {
    let inv = spd_inverse(scatter).ok()?;
    let resid = y - x * coef;
    Some((0..resid.nrows()).map(|t| {
        let r = resid.row(t);
        (r * &inv * r.transpose())[(0, 0)]
    }).collect())
}

fn smallest(dist: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..dist.len()).collect();
    idx.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx.sort_unstable();
    idx
}

struct Candidate {
    det: f64,
    subset: Vec<usize>,
}

/// Concentration steps from `subset`; the determinant never increases.
fn concentrate(x: &DMatrix<f64>, y: &DMatrix<f64>, h: usize, mut subset: Vec<usize>, steps: usize) -> Option<Candidate> {
    let mut fit = subset_fit(x, y, &subset)?;
    for _ in 0..steps {
        let dist = distances(x, y, &fit.coef, &fit.scatter)?;
        let next = smallest(&dist, h);
        if next == subset {
            break;
        }
        let Some(nf) = subset_fit(x, y, &next) else { break };
        let change = fit.det - nf.det;
        if nf.det > fit.det {
            break;
        }
        subset = next;
        fit = nf;
        if change <= 1e-12 * fit.det {
            break;
        }
    }
    Some(Candidate { det: fit.det, subset })
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.det < b.det || (a.det == b.det && a.subset < b.subset)
}

fn start_subset(x: &DMatrix<f64>, y: &DMatrix<f64>, h: usize, seed: u64, start: usize) -> Option<Vec<usize>> {
    let n = x.nrows();
    let k = x.ncols();
    let mut rng = stream_rng(seed, start as u64);
    for _ in 0..20 {
        let rows = sample(&mut rng, n, k).into_vec();
        let mut gram = DMatrix::<f64>::zeros(k, k);
        for &r in &rows {
            let xr = x.row(r).transpose();
            gram += &xr * xr.transpose();
        }
        if linalg::rcond_sym(&gram) < 1e-10 {
            continue;
        }
        // exact elemental fit, then an all-row residual scatter to rank the rows
        let xs = DMatrix::from_fn(k, k, |i, j| x[(rows[i], j)]);
        let ys = DMatrix::from_fn(k, y.ncols(), |i, j| y[(rows[i], j)]);
        let coef = xs.lu().solve(&ys)?;
        let resid = y - x * &coef;
        let scatter = resid.tr_mul(&resid) / n as f64;
        let dist = distances(x, y, &coef, &scatter)?;
        return Some(smallest(&dist, h));
    }
    None
}

fn search(x: &DMatrix<f64>, y: &DMatrix<f64>, h: usize, cfg: &MltsConfig) -> Result<Vec<usize>> {
    let mut pool: Vec<Candidate> = (0..cfg.starts)
        .into_par_iter()
        .filter_map(|s| {
            let sub = start_subset(x, y, h, cfg.seed, s)?;
            concentrate(x, y, h, sub, cfg.initial_steps)
        })
        .collect();
    pool.sort_by(|a, b| a.det.total_cmp(&b.det).then_with(|| a.subset.cmp(&b.subset)));
    pool.dedup_by(|a, b| a.subset == b.subset);
    pool.truncate(cfg.refine.max(1));
    let refined: Vec<Candidate> = pool
        .into_par_iter()
        .filter_map(|c| concentrate(x, y, h, c.subset, cfg.max_steps))
        .collect();
    refined
        .into_iter()
        .reduce(|a, b| if better(&b, &a) { b } else { a })
        .map(|c| c.subset)
        .ok_or(Error::DegenerateSubset)
}

fn assemble(
    x: DMatrix<f64>,
    y: DMatrix<f64>,
    p: usize,
    subset: Vec<usize>,
    alpha_trim: f64,
    c_factor: f64,
    dist_under: Option<Vec<f64>>,
) -> Result<RobustVarModel> {
    let d = y.ncols();
    let fit = subset_fit(&x, &y, &subset).ok_or(Error::DegenerateSubset)?;
    let sigma = linalg::symmetrize(&(&fit.scatter * c_factor));
    let dist = match dist_under {
        Some(dd) => dd,
        None => distances(&x, &y, &fit.coef, &sigma).ok_or(Error::DegenerateSubset)?,
    };
    let intercept = Some(fit.coef.row(0).transpose());
    let coeffs = (0..p).map(|j| fit.coef.rows(1 + j * d, d).transpose()).collect();
    let residuals = &y - &x * &fit.coef;
    let xs = DMatrix::from_fn(subset.len(), x.ncols(), |i, j| x[(subset[i], j)]);
    let model = VarModel {
        p,
        intercept,
        coeffs,
        residuals,
        sigma_u: sigma,
        nobs_effective: subset.len(),
        regressor_gram: Some(xs.tr_mul(&xs)),
    };
    let h = subset.len();
    let mut keep = vec![false; y.nrows()];
    for &i in &subset {
        keep[i] = true;
    }
    let flagged = (0..y.nrows()).filter(|&i| !keep[i]).collect();
    Ok(RobustVarModel { model, h, alpha_trim, c_factor, subset, distances: dist, flagged_outliers: flagged, x, y })
}

pub(crate) fn fit_mlts_from(values: &DMatrix<f64>, p: usize, start: usize, alpha_trim: f64, cfg: &MltsConfig) -> Result<RobustVarModel> {
    if !(0.0..=0.5).contains(&alpha_trim) {
        return Err(Error::InvalidArgument("trimming proportion must lie in [0, 0.5]".into()));
    }
    let d = values.ncols();
    if values.nrows() <= start {
        return Err(Error::InsufficientData("no effective observations".into()));
    }
    let n = values.nrows() - start;
    let h = ((1.0 - alpha_trim) * n as f64).ceil() as usize;
    if h <= d * p + d + 1 {
        return Err(Error::InsufficientData(format!("subset size {h} too small for d = {d}, p = {p}")));
    }
    let (x, y) = design(values, p, true, start);
    if h >= n {
        let ols = fit_var_from(values, p, true, start)?;
        let dist = distances(&x, &y, &ols_coef(&ols), &ols.sigma_u).ok_or(Error::DegenerateSubset)?;
        return Ok(RobustVarModel {
            h: n,
            alpha_trim,
            c_factor: 1.0,
            subset: (0..n).collect(),
            distances: dist,
            flagged_outliers: Vec::new(),
            model: ols,
            x,
            y,
        });
    }
    let subset = search(&x, &y, h, cfg)?;
    let c = trimmed_consistency_factor(alpha_trim, d);
    assemble(x, y, p, subset, alpha_trim, c, None)
}

fn ols_coef(m: &VarModel) -> DMatrix<f64> {
    let d = m.dim();
    let mut coef = DMatrix::zeros(1 + d * m.p, d);
    if let Some(nu) = &m.intercept {
        coef.set_row(0, &nu.transpose());
    }
    for (j, a) in m.coeffs.iter().enumerate() {
        coef.rows_mut(1 + j * d, d).copy_from(&a.transpose());
    }
    coef
}

/// Trimmed fit keeping `⌈(1 − alpha_trim) n⌉` effective rows; `alpha_trim = 0` is OLS.
pub fn fit_mlts(ds: &TimeSeriesDataset, p: usize, alpha_trim: f64, cfg: &MltsConfig) -> Result<RobustVarModel> {
    fit_mlts_from(ds.values(), p, p, alpha_trim, cfg)
}

/// Refit on rows whose trimmed-fit distance is within the `1 − delta` χ²_d quantile, with the
/// scatter rescaled by the matching consistency factor.
pub fn reweight_rmlts(rm: &RobustVarModel, delta: f64) -> Result<RobustVarModel> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidArgument("delta must lie in (0, 1)".into()));
    }
    let d = rm.y.ncols();
    let q = chi2_quantile(1.0 - delta, d as f64);
    let keep: Vec<usize> = (0..rm.distances.len()).filter(|&i| rm.distances[i] <= q).collect();
    if keep.len() <= rm.x.ncols() {
        return Err(Error::DegenerateSubset);
    }
    let c = trimmed_consistency_factor(delta, d);
    assemble(rm.x.clone(), rm.y.clone(), rm.model.p, keep, rm.alpha_trim, c, Some(rm.distances.clone()))
}

/// Information criteria on the reweighted scatter: `log det Σ + (m − d) d / (c_δ n) + penalty`,
/// all candidate orders fitted on the common sample starting at `pmax`.
pub fn robust_order_select(ds: &TimeSeriesDataset, pmax: usize, alpha_trim: f64, delta: f64, cfg: &MltsConfig) -> Result<IcTable> {
    let d = ds.dim();
    let rows: Vec<IcRow> = (0..=pmax)
        .map(|p| {
            let rm = fit_mlts_from(ds.values(), p, pmax, alpha_trim, cfg)?;
            let rw = reweight_rmlts(&rm, delta)?;
            let n = rw.distances.len();
            let m = rw.subset.len();
            let det = rw.model.sigma_u.determinant();
            if !(det > 0.0) {
                return Err(Error::DegenerateSubset);
            }
            let ld = det.ln() + (m as f64 - d as f64) * d as f64 / (rw.c_factor * n as f64);
            let k = (d * d * p) as f64;
            let (wa, wb, wh) = penalties(n);
            Ok(IcRow { p, log_det_sigma: ld, aic: ld + wa * k, bic: ld + wb * k, hqc: ld + wh * k })
        })
        .collect::<Result<_>>()?;
    let n = ds.nobs() - pmax;
    Ok(IcTable::from_rows(rows, n))
}
