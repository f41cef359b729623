//! Residual-based moving block bootstrap for VAR parameters and the bands derived from it.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{fevd, irf, FevdTable, ImpulseResponseSet};
use crate::error::{Error, Result};
use crate::ident::{identify_longrun, identify_recursive, StructuralModel};
use crate::linalg::{quantile_sorted, vech};
use crate::stats::stream_rng;
use crate::var::{fit_var_from, VarModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    /// `None` selects `⌈n^{1/3}⌉`.
    pub block_length: Option<usize>,
    pub seed: u64,
    pub level: f64,
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, block_length: None, seed, level: 0.9 }
    }

    pub fn with_block_length(mut self, l: usize) -> Self {
        self.block_length = Some(l);
        self
    }

    pub fn with_level(mut self, level: f64) -> Self {
        self.level = level;
        self
    }

    pub fn resolved_block_length(&self, n: usize) -> usize {
        self.block_length.unwrap_or_else(|| default_block_length(n))
    }

    fn validate(&self, n: usize) -> Result<usize> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("at least one bootstrap replicate is required".into()));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::InvalidArgument("level must lie in (0, 1)".into()));
        }
        let l = self.resolved_block_length(n);
        if l == 0 || l > n {
            return Err(Error::Shape(format!("block length {l} outside 1..={n}")));
        }
        Ok(l)
    }
}

pub fn default_block_length(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).max(1)
}

/// Block-resampled residuals, centred position-wise so that every resampled row has
/// bootstrap mean zero.
pub fn mbb_resample<R: Rng + ?Sized>(residuals: &DMatrix<f64>, block_length: usize, rng: &mut R) -> Result<DMatrix<f64>> {
    let (n, d) = residuals.shape();
    let l = block_length;
    if l == 0 || l > n {
        return Err(Error::Shape(format!("block length {l} outside 1..={n}")));
    }
    let nstarts = n - l + 1;
    // mean of û_{s+r} over all block starts r, for each within-block position s
    let mut centre = DMatrix::zeros(l, d);
    for s in 0..l {
        for r in 0..nstarts {
            for j in 0..d {
                centre[(s, j)] += residuals[(s + r, j)];
            }
        }
    }
    centre /= nstarts as f64;
    let nblocks = n.div_ceil(l);
    let mut out = DMatrix::zeros(n, d);
    let mut t = 0;
    for _ in 0..nblocks {
        let start = rng.random_range(0..nstarts);
        for s in 0..l {
            if t == n {
                break;
            }
            for j in 0..d {
                out[(t, j)] = residuals[(start + s, j)] - centre[(s, j)];
            }
            t += 1;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateFit {
    pub coeffs: Vec<DMatrix<f64>>,
    pub intercept: Option<DVector<f64>>,
    pub sigma_u: DMatrix<f64>,
}

impl ReplicateFit {
    pub fn beta(&self) -> DVector<f64> {
        let d = self.sigma_u.nrows();
        let mut v = Vec::with_capacity(d * d * self.coeffs.len());
        for a in &self.coeffs {
            v.extend_from_slice(a.as_slice());
        }
        DVector::from_vec(v)
    }

    pub fn vech_sigma(&self) -> DVector<f64> {
        vech(&self.sigma_u)
    }

    pub fn to_model(&self) -> Result<VarModel> {
        VarModel::from_parts(self.coeffs.clone(), self.intercept.clone(), self.sigma_u.clone())
    }
}

#[derive(Debug, Clone)]
pub struct BootstrapDraws {
    pub config: BootstrapConfig,
    pub block_length: usize,
    /// Indexed by replicate; `None` marks a replicate whose refit failed.
    pub fits: Vec<Option<ReplicateFit>>,
    pub warnings: Vec<String>,
}

impl BootstrapDraws {
    pub fn successful(&self) -> impl Iterator<Item = &ReplicateFit> {
        self.fits.iter().flatten()
    }

    pub fn failed(&self) -> Vec<usize> {
        self.fits.iter().enumerate().filter(|(_, f)| f.is_none()).map(|(i, _)| i).collect()
    }
}

/// Replicate `b`: resample residuals, rebuild the series from a zero pre-sample and refit.
pub(crate) fn replicate(m: &VarModel, block_length: usize, seed: u64, b: usize) -> Result<ReplicateFit> {
    let d = m.dim();
    let p = m.p;
    let n = m.residuals.nrows();
    let mut rng = stream_rng(seed, b as u64);
    let u = mbb_resample(&m.residuals, block_length, &mut rng)?;
    let mut y = DMatrix::zeros(n + p, d);
    for t in 0..n {
        let mut row: DVector<f64> = u.row(t).transpose();
        if let Some(nu) = &m.intercept {
            row += nu;
        }
        for (j, a) in m.coeffs.iter().enumerate() {
            row += a * y.row(p + t - j - 1).transpose();
        }
        y.set_row(p + t, &row.transpose());
    }
    let fit = fit_var_from(&y, p, m.intercept.is_some(), p)?;
    Ok(ReplicateFit { coeffs: fit.coeffs, intercept: fit.intercept, sigma_u: fit.sigma_u })
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed * 100 > total {
        return Err(Error::BootstrapFailures { failed, total });
    }
    Ok(())
}

pub fn mbb_distribution(m: &VarModel, cfg: &BootstrapConfig) -> Result<BootstrapDraws> {
    let n = m.residuals.nrows();
    if m.p == 0 {
        return Err(Error::InvalidOrder("bootstrap needs p ≥ 1".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("model carries no residuals".into()));
    }
    let l = cfg.validate(n)?;
    let mut warnings = Vec::new();
    let rho = crate::var::companion(m)?.spectral_radius;
    if rho >= 1.0 {
        warnings.push(format!("estimated model is not stable (spectral radius {rho:.4})"));
    }
    let fits: Vec<Option<ReplicateFit>> =
        (0..cfg.replicates).into_par_iter().map(|b| replicate(m, l, cfg.seed, b).ok()).collect();
    let failed = fits.iter().filter(|f| f.is_none()).count();
    check_failures(failed, cfg.replicates)?;
    if failed > 0 {
        warnings.push(format!("{failed} replicate(s) failed and were excluded"));
    }
    Ok(BootstrapDraws { config: cfg.clone(), block_length: l, fits, warnings })
}

/// Identification schemes that can be re-applied to bootstrap replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BootScheme {
    Recursive(Vec<usize>),
    LongRun,
}

impl BootScheme {
    pub fn apply(&self, m: &VarModel) -> Result<StructuralModel> {
        match self {
            BootScheme::Recursive(order) => identify_recursive(m, order),
            BootScheme::LongRun => identify_longrun(m),
        }
    }
}

/// Hall percentile limits `[2θ̂ − q_{1−α/2}, 2θ̂ − q_{α/2}]` cell by cell.
pub fn hall_bands(point: &[DMatrix<f64>], draws: &[Vec<DMatrix<f64>>], level: f64) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
    let alpha = 1.0 - level;
    let mut lower = Vec::with_capacity(point.len());
    let mut upper = Vec::with_capacity(point.len());
    for (h, est) in point.iter().enumerate() {
        let (r, c) = est.shape();
        let mut lo = DMatrix::zeros(r, c);
        let mut hi = DMatrix::zeros(r, c);
        let mut cell = Vec::with_capacity(draws.len());
        for i in 0..r {
            for j in 0..c {
                cell.clear();
                cell.extend(draws.iter().map(|d| d[h][(i, j)]));
                cell.sort_by(f64::total_cmp);
                let q_lo = quantile_sorted(&cell, alpha / 2.0);
                let q_hi = quantile_sorted(&cell, 1.0 - alpha / 2.0);
                lo[(i, j)] = 2.0 * est[(i, j)] - q_hi;
                hi[(i, j)] = 2.0 * est[(i, j)] - q_lo;
            }
        }
        lower.push(lo);
        upper.push(hi);
    }
    (lower, upper)
}

fn structural_draws<T: Send>(
    m: &VarModel,
    scheme: &BootScheme,
    cfg: &BootstrapConfig,
    f: impl Fn(&StructuralModel) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let draws = mbb_distribution(m, cfg)?;
    let out: Vec<Option<T>> = draws
        .fits
        .par_iter()
        .map(|fit| {
            let fit = fit.as_ref()?;
            let sm = scheme.apply(&fit.to_model().ok()?).ok()?;
            f(&sm).ok()
        })
        .collect();
    let failed = out.iter().filter(|o| o.is_none()).count();
    check_failures(failed, cfg.replicates)?;
    Ok(out.into_iter().flatten().collect())
}

/// Structural impulse responses with Hall percentile bands at `cfg.level`.
pub fn irf_ci(m: &VarModel, scheme: &BootScheme, horizon: usize, cfg: &BootstrapConfig) -> Result<ImpulseResponseSet> {
    let sm = scheme.apply(m)?;
    let mut point = irf(&sm, horizon);
    let draws = structural_draws(m, scheme, cfg, |s| Ok(irf(s, horizon).theta))?;
    let (lower, upper) = hall_bands(&point.theta, &draws, cfg.level);
    point.lower = Some(lower);
    point.upper = Some(upper);
    Ok(point)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FevdBands {
    pub point: FevdTable,
    pub lower: Vec<DMatrix<f64>>,
    pub upper: Vec<DMatrix<f64>>,
}

pub fn fevd_ci(m: &VarModel, scheme: &BootScheme, horizon: usize, cfg: &BootstrapConfig) -> Result<FevdBands> {
    let sm = scheme.apply(m)?;
    let point = fevd(&sm, horizon)?;
    let draws = structural_draws(m, scheme, cfg, |s| fevd(s, horizon).map(|t| t.shares))?;
    let (lower, upper) = hall_bands(&point.shares, &draws, cfg.level);
    Ok(FevdBands { point, lower, upper })
}
