//! Structural identification of the impact matrix `u_t = B w_t`.
//!
//! Exactly identified schemes (recursive, long-run), a single column from an external
//! instrument, restricted minimum-distance estimation with its over-identification test,
//! and bounds on impulse responses under equality and sign restrictions on one column.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, chol_lower, ols, rank, spd_inverse, symmetrize, vech, vech_pairs};
use crate::stats::{normal_quantile, TestResult};
use crate::var::{asymptotic_cov, ma_from_coeffs, VarModel};

/// Minimum first-stage F for an instrument to count as relevant.
pub const WEAK_INSTRUMENT_F: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scheme {
    Recursive { order: Vec<usize> },
    LongRun,
    /// Only column `shock` of the impact matrix is identified.
    ProxyColumn { shock: usize, raw_covariance: Vec<f64>, relevance_f: f64 },
    /// Minimum-distance fit under zero/fixed restrictions on the impact matrix.
    Restricted { n_restrictions: usize },
}

#[derive(Debug, Clone)]
pub struct StructuralModel {
    pub base: VarModel,
    /// d×d; column k is the response on impact to a unit shock k.
    pub impact: DMatrix<f64>,
    pub scheme: Scheme,
    pub shock_names: Vec<String>,
}

impl StructuralModel {
    fn new(base: VarModel, impact: DMatrix<f64>, scheme: Scheme) -> Self {
        let shock_names = (0..impact.ncols()).map(|i| format!("shock{}", i + 1)).collect();
        Self { base, impact, scheme, shock_names }
    }

    pub fn with_shock_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.impact.ncols() {
            return Err(Error::Shape(format!("{} shock names for {} shocks", names.len(), self.impact.ncols())));
        }
        self.shock_names = names;
        Ok(self)
    }

    /// Whether every column of the impact matrix is identified.
    pub fn is_full(&self) -> bool {
        !matches!(self.scheme, Scheme::ProxyColumn { .. })
    }

    /// Shocks whose impact column is identified.
    pub fn identified(&self) -> Vec<usize> {
        match &self.scheme {
            Scheme::ProxyColumn { shock, .. } => vec![*shock],
            _ => (0..self.impact.ncols()).collect(),
        }
    }
}

fn check_permutation(order: &[usize], d: usize) -> Result<()> {
    let mut seen = vec![false; d];
    if order.len() != d {
        return Err(Error::InvalidArgument(format!("ordering has {} entries, expected {d}", order.len())));
    }
    for &o in order {
        if o >= d || seen[o] {
            return Err(Error::InvalidArgument("ordering is not a permutation".into()));
        }
        seen[o] = true;
    }
    Ok(())
}

/// Cholesky identification in the causal ordering `order` (`order[0]` is the most exogenous
/// variable). Rows and columns are returned in the original variable order, so shock `i`
/// is the one attached to variable `i`.
pub fn identify_recursive(m: &VarModel, order: &[usize]) -> Result<StructuralModel> {
    let d = m.dim();
    check_permutation(order, d)?;
    let sigma = &m.sigma_u;
    let permuted = DMatrix::from_fn(d, d, |r, c| sigma[(order[r], order[c])]);
    let l = chol_lower(&permuted)?;
    let mut impact = DMatrix::zeros(d, d);
    for r in 0..d {
        for c in 0..d {
            impact[(order[r], order[c])] = l[(r, c)];
        }
    }
    Ok(StructuralModel::new(m.clone(), impact, Scheme::Recursive { order: order.to_vec() }))
}

/// Long-run identification: the cumulative response `Θ(1) = A(1)^{-1} B` is lower triangular.
pub fn identify_longrun(m: &VarModel) -> Result<StructuralModel> {
    let a1 = m.a_of_one();
    let rc = linalg::rcond(&a1);
    if rc <= 1e-10 {
        return Err(Error::NearUnitRoot { rcond: rc });
    }
    let c1 = a1.clone().try_inverse().ok_or(Error::NearUnitRoot { rcond: rc })?;
    let lr = chol_lower(&(&c1 * &m.sigma_u * c1.transpose()))?;
    let impact = a1 * lr;
    Ok(StructuralModel::new(m.clone(), impact, Scheme::LongRun))
}

/// `Θ(1) = A(1)^{-1} B` for any structural model.
pub fn longrun_impact(s: &StructuralModel) -> Result<DMatrix<f64>> {
    let a1 = s.base.a_of_one();
    let rc = linalg::rcond(&a1);
    let c1 = a1.try_inverse().ok_or(Error::NearUnitRoot { rcond: rc })?;
    Ok(c1 * &s.impact)
}

/// Identifies column `k` from an instrument `z` aligned with the residual rows.
///
/// The column is `c / sqrt(c' Σ^{-1} c)` with `c` the residual–instrument covariance,
/// which makes the shock variance one; the sign follows the instrument.
pub fn identify_proxy(m: &VarModel, z: &DVector<f64>, k: usize, allow_weak: bool) -> Result<StructuralModel> {
    let d = m.dim();
    let n = m.residuals.nrows();
    if k >= d {
        return Err(Error::InvalidArgument(format!("shock index {k} out of range")));
    }
    if z.len() != n {
        return Err(Error::Shape(format!("instrument has {} rows, residuals {n}", z.len())));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("instrument contains non-finite values".into()));
    }
    let zbar = z.mean();
    let zc = z.map(|v| v - zbar);
    let cov = m.residuals.tr_mul(&zc) / n as f64;

    let x = DMatrix::from_fn(n, 2, |r, c| if c == 0 { 1.0 } else { z[r] });
    let y = m.residuals.column(k).into_owned();
    let fit = ols(&x, &DMatrix::from_column_slice(n, 1, y.as_slice()))?;
    let rss: f64 = fit.residuals.iter().map(|e| e * e).sum();
    let s2 = rss / (n as f64 - 2.0);
    let se2 = s2 * fit.gram_inv[(1, 1)];
    let f_stat = if se2 > 0.0 { fit.coef[(1, 0)].powi(2) / se2 } else { f64::INFINITY };
    if !(f_stat >= WEAK_INSTRUMENT_F) && !allow_weak {
        return Err(Error::WeakInstrument { f_stat });
    }

    let sinv = spd_inverse(&m.sigma_u)?;
    let scale = (cov.transpose() * &sinv * &cov)[(0, 0)];
    if !(scale > 0.0) {
        return Err(Error::WeakInstrument { f_stat });
    }
    let column = &cov / scale.sqrt();
    let mut impact = DMatrix::zeros(d, d);
    impact.set_column(k, &column);
    let scheme = Scheme::ProxyColumn { shock: k, raw_covariance: cov.iter().copied().collect(), relevance_f: f_stat };
    Ok(StructuralModel::new(m.clone(), impact, scheme))
}

/// Sample covariance of `vech(û_t û_t')`.
pub(crate) fn vech_outer_cov(residuals: &DMatrix<f64>) -> DMatrix<f64> {
    let n = residuals.nrows();
    let d = residuals.ncols();
    let pairs = vech_pairs(d);
    let q = pairs.len();
    let mut rows = DMatrix::zeros(n, q);
    for t in 0..n {
        for (c, &(i, j)) in pairs.iter().enumerate() {
            rows[(t, c)] = residuals[(t, i)] * residuals[(t, j)];
        }
    }
    let mean = rows.row_mean();
    for t in 0..n {
        for c in 0..q {
            rows[(t, c)] -= mean[c];
        }
    }
    rows.tr_mul(&rows) / n as f64
}

fn distance_weight(m: &VarModel) -> Result<DMatrix<f64>> {
    if m.residuals.nrows() == 0 {
        return Err(Error::InvalidArgument("model carries no residuals".into()));
    }
    spd_inverse(&vech_outer_cov(&m.residuals)).map_err(|_| Error::NotPositiveDefinite)
}

fn j_df(d: usize, n_restrictions: usize) -> Result<usize> {
    let df = (d * (d + 1) / 2) as i64 - (d * d) as i64 + n_restrictions as i64;
    if df < 0 {
        return Err(Error::NegativeDf { df });
    }
    Ok(df as usize)
}

/// Minimum-distance statistic `T · g' Ŵ g` with `g = vech(Σ̂_u) − vech(BB')`.
///
/// Degrees of freedom are moment conditions minus free impact entries,
/// `d(d+1)/2 − (d² − n_restrictions)`.
pub fn j_test(m: &VarModel, impact_candidate: &DMatrix<f64>, n_restrictions: usize) -> Result<TestResult> {
    let d = m.dim();
    if impact_candidate.shape() != (d, d) {
        return Err(Error::Shape("impact candidate must be d×d".into()));
    }
    if impact_candidate.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("impact candidate is not finite".into()));
    }
    let df = j_df(d, n_restrictions)?;
    let w = distance_weight(m)?;
    let g = vech(&m.sigma_u) - vech(&(impact_candidate * impact_candidate.transpose()));
    let stat = m.nobs_effective as f64 * (g.transpose() * w * &g)[(0, 0)];
    Ok(TestResult::chi2(stat, df))
}

/// Minimum-distance estimate of the impact matrix under a restriction pattern: finite
/// entries of `pattern` are fixed at that value, NaN entries are free. Returns the fitted
/// model and the over-identification test.
pub fn identify_restricted(m: &VarModel, pattern: &DMatrix<f64>) -> Result<(StructuralModel, TestResult)> {
    let d = m.dim();
    if pattern.shape() != (d, d) {
        return Err(Error::Shape("restriction pattern must be d×d".into()));
    }
    let free: Vec<(usize, usize)> = (0..d)
        .flat_map(|c| (0..d).map(move |r| (r, c)))
        .filter(|&(r, c)| pattern[(r, c)].is_nan())
        .collect();
    let n_restrictions = d * d - free.len();
    let df = j_df(d, n_restrictions)?;
    let w = distance_weight(m)?;
    let root = chol_lower(&w)?;
    let target = vech(&m.sigma_u);
    let pairs = vech_pairs(d);
    let q = pairs.len();

    let assemble = |theta: &DVector<f64>| {
        let mut b = pattern.map(|v| if v.is_nan() { 0.0 } else { v });
        for (k, &(r, c)) in free.iter().enumerate() {
            b[(r, c)] = theta[k];
        }
        b
    };
    // whitened distance r(θ) = L'(s − vech BB') so that ‖r‖² = g'Ŵg
    let resid = |b: &DMatrix<f64>| root.tr_mul(&(&target - vech(&(b * b.transpose()))));
    let jac = |b: &DMatrix<f64>| {
        let mut jv = DMatrix::zeros(q, free.len());
        for (k, &(a, bc)) in free.iter().enumerate() {
            for (row, &(i, j)) in pairs.iter().enumerate() {
                let mut v = 0.0;
                if i == a {
                    v += b[(j, bc)];
                }
                if j == a {
                    v += b[(i, bc)];
                }
                jv[(row, k)] = v;
            }
        }
        -(root.tr_mul(&jv))
    };

    let chol = chol_lower(&m.sigma_u)?;
    let diag = DMatrix::from_diagonal(&m.sigma_u.diagonal().map(f64::sqrt));
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for start in [chol, diag] {
        let mut theta = DVector::from_iterator(free.len(), free.iter().map(|&(r, c)| start[(r, c)]));
        let mut b = assemble(&theta);
        let mut r = resid(&b);
        let mut cost = r.norm_squared();
        let mut mu = 1e-3;
        for _ in 0..500 {
            let j = jac(&b);
            let jtj = j.tr_mul(&j);
            let grad = j.tr_mul(&r);
            let mut damped = jtj.clone();
            for k in 0..damped.nrows() {
                damped[(k, k)] += mu * (1.0 + jtj[(k, k)]);
            }
            let Some(step) = damped.lu().solve(&(-&grad)) else { break };
            let cand = &theta + &step;
            let cb = assemble(&cand);
            let cr = resid(&cb);
            let cc = cr.norm_squared();
            if cc < cost {
                let rel = (cost - cc) / cost.max(1e-300);
                theta = cand;
                b = cb;
                r = cr;
                cost = cc;
                mu = (mu * 0.3).max(1e-12);
                if rel < 1e-14 || step.norm() < 1e-12 * (1.0 + theta.norm()) {
                    break;
                }
            } else {
                mu *= 10.0;
                if mu > 1e12 {
                    break;
                }
            }
        }
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, b));
        }
    }
    let (cost, mut impact) = best.expect("at least one start");
    for c in 0..d {
        let column_free = (0..d).all(|r| pattern[(r, c)].is_nan() || pattern[(r, c)] == 0.0);
        if column_free && impact[(c, c)] < 0.0 {
            for r in 0..d {
                impact[(r, c)] = -impact[(r, c)];
            }
        }
    }
    let test = TestResult::chi2(m.nobs_effective as f64 * cost, df);
    let model = StructuralModel::new(m.clone(), impact, Scheme::Restricted { n_restrictions });
    Ok((model, test))
}

/// Equality (`Z'b = 0`) and sign (`S'b ≥ 0`) restrictions on one impact column.
#[derive(Debug, Clone, PartialEq)]
pub struct SignRestrictionSet {
    /// d×m_z
    pub equality: DMatrix<f64>,
    /// d×m_s
    pub inequality: DMatrix<f64>,
    pub shock: usize,
}

impl SignRestrictionSet {
    pub fn new(equality: DMatrix<f64>, inequality: DMatrix<f64>, shock: usize) -> Result<Self> {
        let d = equality.nrows().max(inequality.nrows());
        if equality.nrows() != d || inequality.nrows() != d {
            return Err(Error::Shape("restriction matrices must have d rows".into()));
        }
        if equality.iter().chain(inequality.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Domain("restriction matrices must be finite".into()));
        }
        Ok(Self { equality, inequality, shock })
    }

    /// Restrictions on impact responses: zero response of each `zero_vars` entry, and
    /// `(var, sign)` pairs with sign > 0 for a non-negative response.
    pub fn on_impact(d: usize, zero_vars: &[usize], signs: &[(usize, f64)], shock: usize) -> Result<Self> {
        if zero_vars.iter().chain(signs.iter().map(|(v, _)| v)).any(|&v| v >= d) {
            return Err(Error::InvalidArgument("restricted variable out of range".into()));
        }
        let eq = DMatrix::from_fn(d, zero_vars.len(), |r, c| if r == zero_vars[c] { 1.0 } else { 0.0 });
        let ineq = DMatrix::from_fn(d, signs.len(), |r, c| if r == signs[c].0 { signs[c].1.signum() } else { 0.0 });
        Self::new(eq, ineq, shock)
    }

    pub fn dim(&self) -> usize {
        self.equality.nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrfBoundInterval {
    pub horizon: usize,
    pub response: usize,
    pub shock: usize,
    pub lower: f64,
    pub upper: f64,
    pub ci_lower: f64,
    pub ci_upper: f64,
    pub sigma_lower: f64,
    pub sigma_upper: f64,
    /// Larger of the two delta-method scales.
    pub sigma_hat: f64,
    pub level: f64,
}

/// Maximiser of `c'x` over `{x : x'Σ^{-1}x = 1, Z'x = 0, S'x ≥ 0}`.
#[derive(Debug, Clone)]
pub(crate) struct BoundSolution {
    pub value: f64,
    pub argmax: DVector<f64>,
}

const FEAS_TOL: f64 = 1e-9;

fn feasible(s: &DMatrix<f64>, x: &DVector<f64>) -> bool {
    let xn = x.norm();
    (0..s.ncols()).all(|l| {
        let col = s.column(l);
        col.dot(x) >= -FEAS_TOL * col.norm() * xn
    })
}

pub(crate) fn maximize_on_ellipsoid(
    c: &DVector<f64>,
    sigma: &DMatrix<f64>,
    sigma_inv: &DMatrix<f64>,
    r: &SignRestrictionSet,
) -> Result<BoundSolution> {
    let d = c.len();
    let mz = r.equality.ncols();
    let ms = r.inequality.ncols();
    let scale = (c.transpose() * sigma * c)[(0, 0)].sqrt().max(1e-300);

    let candidate = |mask: u32| -> Option<(f64, DVector<f64>)> {
        let active: Vec<usize> = (0..ms).filter(|l| mask >> l & 1 == 1).collect();
        if mz + active.len() >= d {
            return None;
        }
        let mut w = DMatrix::zeros(d, mz + active.len());
        for k in 0..mz {
            w.set_column(k, &r.equality.column(k));
        }
        for (k, &l) in active.iter().enumerate() {
            w.set_column(mz + k, &r.inequality.column(l));
        }
        let proj = if w.ncols() == 0 {
            sigma.clone()
        } else {
            if rank(&w, 1e-10) < w.ncols() {
                return None;
            }
            let sw = sigma * &w;
            let g = spd_inverse(&w.tr_mul(&sw)).ok()?;
            symmetrize(&(sigma - &sw * g * sw.transpose()))
        };
        let mc = &proj * c;
        let v2 = c.dot(&mc);
        if v2 > (1e-10 * scale).powi(2) {
            let v = v2.sqrt();
            let x = mc / v;
            if feasible(&r.inequality, &x) {
                return Some((v, x));
            }
            // on a one-dimensional face the ellipsoid slice is just {x, −x}
            let neg = -x;
            return (w.ncols() + 1 == d && feasible(&r.inequality, &neg)).then_some((-v, neg));
        }
        // the objective vanishes on this face: any feasible point of it attains zero
        let mut dirs: Vec<DVector<f64>> = (0..d).map(|k| proj.column(k).into_owned()).collect();
        let mut sum = DVector::zeros(d);
        for l in 0..ms {
            let v = &proj * r.inequality.column(l);
            sum += &v;
            dirs.push(v);
        }
        dirs.push(sum);
        for dir in dirs {
            for sgn in [1.0, -1.0] {
                let x = &dir * sgn;
                let q = (x.transpose() * sigma_inv * &x)[(0, 0)];
                if q > 1e-20 {
                    let x = x / q.sqrt();
                    if feasible(&r.inequality, &x) && feasible(&r.equality, &x) && feasible(&(-&r.equality), &x) {
                        return Some((0.0, x));
                    }
                }
            }
        }
        None
    };

    let best = (0u32..(1u32 << ms))
        .into_par_iter()
        .filter_map(|mask| candidate(mask).map(|(v, x)| (v, mask, x)))
        .reduce_with(|a, b| {
            // larger value wins; among equal values the smaller active-set mask wins
            if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        });
    match best {
        Some((value, _, argmax)) => Ok(BoundSolution { value, argmax }),
        None => Err(Error::InfeasibleRestrictions),
    }
}

/// Upper and lower bound of `e_i' Φ_k b` over admissible columns `b`, with maximisers.
pub(crate) fn bounds_at(
    coeffs: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    r: &SignRestrictionSet,
    horizon: usize,
    response: usize,
) -> Result<(BoundSolution, BoundSolution)> {
    let d = sigma.nrows();
    let phi = ma_from_coeffs(coeffs, d, horizon);
    let c = phi[horizon].row(response).transpose();
    let sigma_inv = spd_inverse(sigma)?;
    let upper = maximize_on_ellipsoid(&c, sigma, &sigma_inv, r)?;
    let neg = maximize_on_ellipsoid(&(-&c), sigma, &sigma_inv, r)?;
    let lower = BoundSolution { value: -neg.value, argmax: neg.argmax };
    Ok((upper, lower))
}

/// Gradient of a bound with respect to `(vec[A_1 … A_p], vech Σ)` at the maximiser `x`.
pub(crate) fn bound_gradient(
    coeffs: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    horizon: usize,
    response: usize,
    sol: &BoundSolution,
) -> Result<DVector<f64>> {
    let d = sigma.nrows();
    let p = coeffs.len();
    let phi = ma_from_coeffs(coeffs, d, horizon);
    let x = &sol.argmax;
    let npar = d * d * p;
    let pairs = vech_pairs(d);
    let mut grad = DVector::zeros(npar + pairs.len());

    // forward-mode derivative of Φ_horizon along each lag coefficient
    for (idx, g) in grad.iter_mut().take(npar).enumerate() {
        let j = idx / (d * d);
        let col = (idx / d) % d;
        let row = idx % d;
        let mut dphi: Vec<DMatrix<f64>> = vec![DMatrix::zeros(d, d)];
        for h in 1..=horizon {
            let mut acc = DMatrix::zeros(d, d);
            for l in 1..=h.min(p) {
                acc += &coeffs[l - 1] * &dphi[h - l];
                if l - 1 == j {
                    // dA_l Φ_{h−l} with dA_l = E_{row,col}
                    let src = phi[h - l].row(col);
                    for c in 0..d {
                        acc[(row, c)] += src[c];
                    }
                }
            }
            dphi.push(acc);
        }
        *g = dphi[horizon].row(response).dot(&x.transpose());
    }

    let sinv = spd_inverse(sigma)?;
    let q = &sinv * x;
    let half = 0.5 * sol.value;
    for (k, &(a, b)) in pairs.iter().enumerate() {
        grad[npar + k] = if a == b { half * q[a] * q[a] } else { half * 2.0 * q[a] * q[b] };
    }
    Ok(grad)
}

/// Bounds on the horizon-`horizon` response of variable `response` to the restricted shock,
/// with delta-method confidence limits at confidence `level`.
pub fn sign_restriction_bounds(
    m: &VarModel,
    r: &SignRestrictionSet,
    horizon: usize,
    response: usize,
    level: f64,
) -> Result<IrfBoundInterval> {
    let d = m.dim();
    if r.dim() != d {
        return Err(Error::Shape(format!("restrictions are for d = {}, model has d = {d}", r.dim())));
    }
    if response >= d {
        return Err(Error::InvalidArgument(format!("response index {response} out of range")));
    }
    if r.inequality.ncols() > 20 {
        return Err(Error::TooManyRestrictions(r.inequality.ncols()));
    }
    if r.equality.ncols() > d.saturating_sub(1) || rank(&r.equality, 1e-10) < r.equality.ncols() {
        return Err(Error::InvalidArgument("equality restrictions must be at most d−1 independent columns".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument("level must lie in (0, 1)".into()));
    }
    chol_lower(&m.sigma_u)?;
    let (upper, lower) = bounds_at(&m.coeffs, &m.sigma_u, r, horizon, response)?;

    let (sigma_lower, sigma_upper) = if m.nobs_effective > 0 && m.regressor_gram.is_some() {
        let omega_a = asymptotic_cov(m)?;
        let omega_s = vech_outer_cov(&m.residuals);
        let na = omega_a.nrows();
        let ns = omega_s.nrows();
        let mut omega = DMatrix::zeros(na + ns, na + ns);
        omega.view_mut((0, 0), (na, na)).copy_from(&omega_a);
        omega.view_mut((na, na), (ns, ns)).copy_from(&omega_s);
        let scale = |sol: &BoundSolution| -> Result<f64> {
            let g = bound_gradient(&m.coeffs, &m.sigma_u, horizon, response, sol)?;
            Ok((g.transpose() * &omega * &g)[(0, 0)].max(0.0).sqrt())
        };
        (scale(&lower)?, scale(&upper)?)
    } else {
        (0.0, 0.0)
    };
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    let rt = (m.nobs_effective.max(1) as f64).sqrt();
    Ok(IrfBoundInterval {
        horizon,
        response,
        shock: r.shock,
        lower: lower.value,
        upper: upper.value,
        ci_lower: lower.value - z * sigma_lower / rt,
        ci_upper: upper.value + z * sigma_upper / rt,
        sigma_lower,
        sigma_upper,
        sigma_hat: sigma_lower.max(sigma_upper),
        level,
    })
}
