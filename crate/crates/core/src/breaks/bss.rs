//! Block segmentation break detection: a fused-penalty least-squares problem over per-block
//! VAR coefficients, followed by information-criterion screening of the candidate breaks.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use super::cusum::demean;
use super::tv::{soft_threshold, tv_prox};
use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::var::{design, fit_var_from, VarModel};

/// Exhaustive subset search is used up to this many candidates.
pub const EXACT_SCREEN_MAX: usize = 12;

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop once the relative objective change falls below this.
    pub tol: f64,
    pub record_trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iter: 10_000, tol: 1e-6, record_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub block: usize,
    /// Dataset row at which the block starts.
    pub time: usize,
    /// Frobenius norm of the coefficient jump into this block.
    pub jump_norm: f64,
}

#[derive(Debug, Clone)]
pub struct BssFit {
    pub block_length: usize,
    /// Dataset rows `[start, end)` covered by each block.
    pub blocks: Vec<(usize, usize)>,
    /// Per-block `[A_1 … A_p]`.
    pub coefficients: Vec<DMatrix<f64>>,
    pub candidates: Vec<Candidate>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every iteration when requested.
    pub trace: Vec<f64>,
}

/// Sufficient statistics of the block problem on demeaned data without intercept.
struct BlockProblem {
    n: usize,
    p: usize,
    d: usize,
    block_length: usize,
    bounds: Vec<(usize, usize)>,
    grams: Vec<DMatrix<f64>>,
    cross: Vec<DMatrix<f64>>,
    yy: Vec<f64>,
    lipschitz: f64,
}

struct Solution {
    beta: Vec<DMatrix<f64>>,
    objective: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
}

impl BlockProblem {
    fn new(values: &DMatrix<f64>, p: usize, block_length: usize) -> Result<Self> {
        let (t, d) = values.shape();
        if p == 0 {
            return Err(Error::InvalidOrder("break detection needs p ≥ 1".into()));
        }
        if block_length < d * p + 2 {
            return Err(Error::InvalidArgument(format!("block length {block_length} below d·p + 2 = {}", d * p + 2)));
        }
        let n = t.saturating_sub(p);
        let nblocks = n / block_length;
        if nblocks < 2 {
            return Err(Error::InsufficientData(format!("{n} effective rows give fewer than two blocks of {block_length}")));
        }
        let (x, y) = design(values, p, false, p);
        let bounds: Vec<(usize, usize)> = (0..nblocks)
            .map(|i| (i * block_length, if i + 1 == nblocks { n } else { (i + 1) * block_length }))
            .collect();
        let mut grams = Vec::with_capacity(nblocks);
        let mut cross = Vec::with_capacity(nblocks);
        let mut yy = Vec::with_capacity(nblocks);
        let mut top = 0.0f64;
        for &(s, e) in &bounds {
            let xb = x.rows(s, e - s);
            let yb = y.rows(s, e - s);
            let g = xb.tr_mul(&xb);
            top = top.max(g.clone().symmetric_eigenvalues().max());
            grams.push(g);
            cross.push(xb.tr_mul(&yb));
            yy.push(yb.norm_squared());
        }
        let lipschitz = if top > 0.0 { 2.0 * top / n as f64 } else { 1.0 };
        Ok(Self { n, p, d, block_length, bounds, grams, cross, yy, lipschitz })
    }

    fn loss(&self, beta: &[DMatrix<f64>]) -> f64 {
        let s: f64 = (0..beta.len())
            .map(|b| self.yy[b] - 2.0 * beta[b].dot(&self.cross[b]) + beta[b].dot(&(&self.grams[b] * &beta[b])))
            .sum();
        s / self.n as f64
    }

    fn penalty(beta: &[DMatrix<f64>], l1: f64, l2: f64) -> f64 {
        let mut tv = beta[0].lp_norm(1);
        for b in 1..beta.len() {
            tv += (&beta[b] - &beta[b - 1]).lp_norm(1);
        }
        let lasso: f64 = beta.iter().map(|m| m.lp_norm(1)).sum();
        l1 * tv + l2 * lasso
    }

    fn objective(&self, beta: &[DMatrix<f64>], l1: f64, l2: f64) -> f64 {
        self.loss(beta) + Self::penalty(beta, l1, l2)
    }

    /// Anchored total variation on each coefficient path across blocks, then soft-thresholding.
    fn prox(&self, w: &[DMatrix<f64>], step: f64, l1: f64, l2: f64) -> Vec<DMatrix<f64>> {
        let mut out = w.to_vec();
        let (rows, cols) = w[0].shape();
        let mut path = vec![0.0; w.len()];
        for r in 0..rows {
            for c in 0..cols {
                for (b, m) in w.iter().enumerate() {
                    path[b] = m[(r, c)];
                }
                let z = tv_prox(&path, step * l1, true);
                for (b, m) in out.iter_mut().enumerate() {
                    m[(r, c)] = soft_threshold(z[b], step * l2);
                }
            }
        }
        out
    }

    /// Monotone accelerated proximal gradient from zero.
    fn solve(&self, l1: f64, l2: f64, opts: &SolverOptions) -> Solution {
        let k = self.d * self.p;
        let zero = vec![DMatrix::<f64>::zeros(k, self.d); self.bounds.len()];
        let step = 1.0 / self.lipschitz;
        let scale = 2.0 / self.n as f64;
        let mut x = zero.clone();
        let mut fx = self.objective(&x, l1, l2);
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut trace = Vec::new();
        let mut converged = false;
        let mut iterations = 0;
        while iterations < opts.max_iter {
            iterations += 1;
            let w: Vec<DMatrix<f64>> = (0..y.len())
                .map(|b| &y[b] - (&self.grams[b] * &y[b] - &self.cross[b]) * (scale * step))
                .collect();
            let z = self.prox(&w, step, l1, l2);
            let fz = self.objective(&z, l1, l2);
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let change = (fx - fz).abs();
            let prev = x.clone();
            let fprev = fx;
            if fz <= fx {
                x = z.clone();
                fx = fz;
            }
            debug_assert!(fx <= fprev);
            y = (0..x.len())
                .map(|b| &x[b] + (&z[b] - &x[b]) * (t / t_next) + (&x[b] - &prev[b]) * ((t - 1.0) / t_next))
                .collect();
            t = t_next;
            if opts.record_trace {
                trace.push(fx);
            }
            if change <= opts.tol * fprev.abs().max(f64::MIN_POSITIVE) {
                converged = true;
                break;
            }
        }
        Solution { beta: x, objective: fx, iterations, converged, trace }
    }

    /// λ₁ at which every jump is zero, whatever λ₂.
    fn lambda_max(&self) -> f64 {
        let mut tail = DMatrix::<f64>::zeros(self.d * self.p, self.d);
        let mut best = 0.0f64;
        for c in self.cross.iter().rev() {
            tail += c;
            best = best.max(tail.amax());
        }
        2.0 * best / self.n as f64
    }

    fn candidates(&self, beta: &[DMatrix<f64>]) -> Vec<Candidate> {
        (1..beta.len())
            .filter_map(|b| {
                let jump = (&beta[b] - &beta[b - 1]).norm();
                (jump > 0.0).then(|| Candidate { block: b, time: self.p + self.bounds[b].0, jump_norm: jump })
            })
            .collect()
    }

    fn to_fit(&self, sol: Solution) -> BssFit {
        BssFit {
            block_length: self.block_length,
            blocks: self.bounds.iter().map(|&(s, e)| (s + self.p, e + self.p)).collect(),
            candidates: self.candidates(&sol.beta),
            coefficients: sol.beta.iter().map(|m| m.transpose()).collect(),
            objective: sol.objective,
            iterations: sol.iterations,
            converged: sol.converged,
            trace: sol.trace,
        }
    }
}

pub fn default_block_length(n: usize) -> usize {
    (n as f64).sqrt().ceil() as usize
}

/// Candidate breaks from the fused-penalty block problem (data demeaned, no intercept).
pub fn bss_detect(ds: &TimeSeriesDataset, p: usize, block_length: usize, lambda1: f64, lambda2: f64) -> Result<BssFit> {
    bss_detect_with(ds, p, block_length, lambda1, lambda2, &SolverOptions::default())
}

pub fn bss_detect_with(
    ds: &TimeSeriesDataset,
    p: usize,
    block_length: usize,
    lambda1: f64,
    lambda2: f64,
    opts: &SolverOptions,
) -> Result<BssFit> {
    check_lambdas(lambda1, lambda2)?;
    let problem = BlockProblem::new(&demean(ds.values()), p, block_length)?;
    Ok(problem.to_fit(problem.solve(lambda1, lambda2, opts)))
}

fn check_lambdas(l1: f64, l2: f64) -> Result<()> {
    if !(l1 >= 0.0 && l2 >= 0.0) {
        return Err(Error::InvalidArgument("penalties must be non-negative".into()));
    }
    Ok(())
}

/// Prefix sums of `x x′`, `x y′`, `y y′` over effective rows for O(1) segment regressions.
struct Moments {
    n: usize,
    gram: Vec<DMatrix<f64>>,
    cross: Vec<DMatrix<f64>>,
    yy: Vec<DMatrix<f64>>,
}

impl Moments {
    fn new(values: &DMatrix<f64>, p: usize) -> Self {
        let (x, y) = design(values, p, false, p);
        let (n, k) = x.shape();
        let d = y.ncols();
        let mut gram = vec![DMatrix::zeros(k, k)];
        let mut cross = vec![DMatrix::zeros(k, d)];
        let mut yy = vec![DMatrix::zeros(d, d)];
        for t in 0..n {
            let xt = x.row(t).transpose();
            let yt = y.row(t).transpose();
            gram.push(&gram[t] + &xt * xt.transpose());
            cross.push(&cross[t] + &xt * yt.transpose());
            yy.push(&yy[t] + &yt * yt.transpose());
        }
        Self { n, gram, cross, yy }
    }

    /// Residual cross-product matrix of the least-squares fit on effective rows `[s, e)`.
    fn residual_sscp(&self, s: usize, e: usize) -> DMatrix<f64> {
        let g = &self.gram[e] - &self.gram[s];
        let c = &self.cross[e] - &self.cross[s];
        let yy = &self.yy[e] - &self.yy[s];
        let k = g.nrows();
        match g.cholesky() {
            Some(ch) if e - s > k => &yy - c.transpose() * ch.solve(&c),
            _ => yy,
        }
    }
}

struct Screen {
    moments: Moments,
    neighbourhood: usize,
    omega: f64,
}

impl Screen {
    /// `n · ln det(Σ̂_A) + ω |A|`, with `Σ̂_A` pooled over the segments cut at `cuts`.
    fn criterion(&self, cuts: &[usize]) -> f64 {
        let n = self.moments.n;
        let d = self.moments.yy[0].nrows();
        let mut sscp = DMatrix::<f64>::zeros(d, d);
        let mut start = 0;
        for &c in cuts.iter().chain(std::iter::once(&n)) {
            sscp += self.moments.residual_sscp(start, c);
            start = c;
        }
        let logdet = match (sscp / n as f64).cholesky() {
            Some(ch) => 2.0 * ch.l().diagonal().iter().map(|v| v.ln()).sum::<f64>(),
            None => f64::NEG_INFINITY,
        };
        n as f64 * logdet + self.omega * cuts.len() as f64
    }

    /// Breaks closer than `2 a_n` to each other, or `a_n` to a sample end, share local windows.
    fn violations(&self, cuts: &[usize]) -> usize {
        let a = self.neighbourhood;
        let mut v = cuts.windows(2).filter(|w| w[1] - w[0] < 2 * a).count();
        if let (Some(&first), Some(&last)) = (cuts.first(), cuts.last()) {
            v += usize::from(first < a) + usize::from(self.moments.n - last < a);
        }
        v
    }

    fn select(&self, cands: &[usize]) -> (Vec<usize>, f64) {
        if cands.len() <= EXACT_SCREEN_MAX {
            let mut best = (Vec::new(), self.criterion(&[]));
            for mask in 1u32..(1u32 << cands.len()) {
                let cuts: Vec<usize> = (0..cands.len()).filter(|i| mask >> i & 1 == 1).map(|i| cands[i]).collect();
                if self.violations(&cuts) > 0 {
                    continue;
                }
                let v = self.criterion(&cuts);
                if v < best.1 || (v == best.1 && cuts.len() < best.0.len()) {
                    best = (cuts, v);
                }
            }
            return best;
        }
        let mut cur = cands.to_vec();
        let mut cur_key = (self.violations(&cur), self.criterion(&cur));
        while !cur.is_empty() {
            let (i, key) = (0..cur.len())
                .map(|i| {
                    let mut next = cur.clone();
                    next.remove(i);
                    (i, (self.violations(&next), self.criterion(&next)))
                })
                .min_by(|a, b| a.1 .0.cmp(&b.1 .0).then(a.1 .1.total_cmp(&b.1 .1)))
                .expect("non-empty");
            if cur_key.0 > 0 || key.1 <= cur_key.1 {
                cur.remove(i);
                cur_key = key;
            } else {
                break;
            }
        }
        (cur, cur_key.1)
    }
}

#[derive(Debug, Clone)]
pub struct SegmentFit {
    /// Dataset rows `[start, end)` whose observations are explained by this fit.
    pub start: usize,
    pub end: usize,
    pub model: VarModel,
}

#[derive(Debug, Clone)]
pub struct LicResult {
    pub breaks: Vec<usize>,
    pub segments: Vec<SegmentFit>,
    pub criterion: f64,
}

/// Keeps the subset of candidate break rows that minimises the information criterion.
///
/// Only subsets whose breaks keep `neighbourhood` break-free observations on either side are
/// admissible. Segments are refitted on the raw data with an intercept.
pub fn lic_screen(ds: &TimeSeriesDataset, candidates: &[usize], p: usize, neighbourhood: usize, omega: f64) -> Result<LicResult> {
    let screen = make_screen(ds, p, neighbourhood, omega)?;
    let t = ds.nobs();
    if candidates.windows(2).any(|w| w[0] >= w[1]) || candidates.iter().any(|&c| c <= p || c >= t) {
        return Err(Error::InvalidArgument("candidates must be strictly increasing rows inside the effective sample".into()));
    }
    let eff: Vec<usize> = candidates.iter().map(|c| c - p).collect();
    let (cuts, criterion) = screen.select(&eff);
    finish(ds, p, &cuts, criterion)
}

fn make_screen(ds: &TimeSeriesDataset, p: usize, neighbourhood: usize, omega: f64) -> Result<Screen> {
    let d = ds.dim();
    if p == 0 {
        return Err(Error::InvalidOrder("break screening needs p ≥ 1".into()));
    }
    if neighbourhood < d * p + 2 {
        return Err(Error::InvalidArgument(format!("neighbourhood {neighbourhood} below d·p + 2 = {}", d * p + 2)));
    }
    if !(omega >= 0.0) {
        return Err(Error::InvalidArgument("penalty must be non-negative".into()));
    }
    if ds.nobs() <= p + d * p + 1 {
        return Err(Error::InsufficientData(format!("{} observations for p = {p}", ds.nobs())));
    }
    Ok(Screen { moments: Moments::new(&demean(ds.values()), p), neighbourhood, omega })
}

fn finish(ds: &TimeSeriesDataset, p: usize, cuts: &[usize], criterion: f64) -> Result<LicResult> {
    let t = ds.nobs();
    let breaks: Vec<usize> = cuts.iter().map(|c| c + p).collect();
    let mut edges = vec![p];
    edges.extend(&breaks);
    edges.push(t);
    let segments = edges
        .windows(2)
        .map(|w| {
            let slice = ds.values().rows(w[0] - p, w[1] - w[0] + p).into_owned();
            Ok(SegmentFit { start: w[0], end: w[1], model: fit_var_from(&slice, p, true, p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LicResult { breaks, segments, criterion })
}

#[derive(Debug, Clone, Default)]
pub struct BreakOptions {
    /// Defaults to `⌈√n⌉` with n the effective sample size.
    pub block_length: Option<usize>,
    /// Screening neighbourhood; defaults to the block length.
    pub neighbourhood: Option<usize>,
    /// Per-break penalty; defaults to `d²p · ln n`.
    pub omega: Option<f64>,
    /// `(λ₁, λ₂)` pairs; defaults to [`lambda_grid`].
    pub lambdas: Option<Vec<(f64, f64)>>,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct Tuning {
    pub block_length: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub neighbourhood: usize,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct BreakReport {
    pub candidate_blocks: Vec<Candidate>,
    pub final_breaks: Vec<usize>,
    pub segments: Vec<SegmentFit>,
    pub tuning: Tuning,
    pub criterion: f64,
    pub converged: bool,
}

/// Ten log-spaced λ₁ from the all-zero threshold down by a factor 1000, with λ₂ = λ₁ / 10.
pub fn lambda_grid(lambda_max: f64) -> Vec<(f64, f64)> {
    (0..10)
        .map(|i| {
            let l1 = lambda_max * 10f64.powf(-3.0 * i as f64 / 9.0);
            (l1, 0.1 * l1)
        })
        .collect()
}

/// Candidate search over a λ grid, each candidate set screened; the grid point with the lowest
/// screened criterion wins, ties going to the larger penalty.
pub fn detect_breaks(ds: &TimeSeriesDataset, p: usize, opts: &BreakOptions) -> Result<BreakReport> {
    let n = ds.nobs().saturating_sub(p);
    let d = ds.dim();
    let block_length = opts.block_length.unwrap_or_else(|| default_block_length(n));
    let neighbourhood = opts.neighbourhood.unwrap_or(block_length);
    let omega = opts.omega.unwrap_or((d * d * p) as f64 * (n as f64).ln());
    let values = demean(ds.values());
    let problem = BlockProblem::new(&values, p, block_length)?;
    let screen = make_screen(ds, p, neighbourhood, omega)?;
    let grid = opts.lambdas.clone().unwrap_or_else(|| lambda_grid(problem.lambda_max()));
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty penalty grid".into()));
    }
    for &(l1, l2) in &grid {
        check_lambdas(l1, l2)?;
    }
    let runs: Vec<(BssFit, Vec<usize>, f64)> = grid
        .par_iter()
        .map(|&(l1, l2)| {
            let fit = problem.to_fit(problem.solve(l1, l2, &opts.solver));
            let eff: Vec<usize> = fit.candidates.iter().map(|c| c.time - p).collect();
            let (cuts, crit) = screen.select(&eff);
            (fit, cuts, crit)
        })
        .collect();
    let best = (0..runs.len()).fold(0, |b, i| if runs[i].2 < runs[b].2 { i } else { b });
    let (fit, cuts, crit) = &runs[best];
    let lic = finish(ds, p, cuts, *crit)?;
    Ok(BreakReport {
        candidate_blocks: fit.candidates.clone(),
        final_breaks: lic.breaks,
        segments: lic.segments,
        tuning: Tuning { block_length, lambda1: grid[best].0, lambda2: grid[best].1, neighbourhood, omega },
        criterion: lic.criterion,
        converged: fit.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ols;
    use crate::simulate::Dgp;
    use crate::stats::stream_rng;

    fn flip_series(t: usize, at: usize, seed: u64) -> TimeSeriesDataset {
        let a = DMatrix::identity(2, 2) * 0.6;
        let mut dgp = Dgp::var(vec![a.clone()], DMatrix::identity(2, 2));
        dgp.regime_change = Some((at, vec![-a]));
        TimeSeriesDataset::from_matrix(dgp.simulate(t, &mut stream_rng(seed, 0)).data).unwrap()
    }

    fn stable_series(t: usize, seed: u64) -> TimeSeriesDataset {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.4]);
        TimeSeriesDataset::from_matrix(Dgp::var(vec![a], DMatrix::identity(2, 2)).simulate(t, &mut stream_rng(seed, 0)).data).unwrap()
    }

    #[test]
    fn zero_penalty_reproduces_blockwise_ols() {
        let ds = stable_series(300, 1);
        let opts = SolverOptions { max_iter: 20_000, tol: 0.0, record_trace: false };
        let fit = bss_detect_with(&ds, 1, 60, 0.0, 0.0, &opts).unwrap();
        let values = demean(ds.values());
        let (x, y) = design(&values, 1, false, 1);
        for (b, &(s, e)) in fit.blocks.iter().enumerate() {
            let o = ols(&x.rows(s - 1, e - s).into_owned(), &y.rows(s - 1, e - s).into_owned()).unwrap();
            let diff = (&fit.coefficients[b] - o.coef.transpose()).amax();
            assert!(diff < 1e-6, "block {b}: {diff}");
        }
    }

    #[test]
    fn objective_never_increases() {
        let ds = flip_series(600, 300, 2);
        let opts = SolverOptions { record_trace: true, ..Default::default() };
        let fit = bss_detect_with(&ds, 1, 25, 0.02, 0.002, &opts).unwrap();
        assert!(fit.trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.converged);
    }

    #[test]
    fn huge_sparsity_penalty_leaves_no_candidates() {
        let ds = flip_series(600, 300, 3);
        let fit = bss_detect(&ds, 1, 25, 0.0, 1e6).unwrap();
        assert!(fit.candidates.is_empty());
        assert!(fit.coefficients.iter().all(|m| m.amax() == 0.0));
    }

    #[test]
    fn zero_grid_threshold_is_exact() {
        let ds = flip_series(600, 300, 4);
        let problem = BlockProblem::new(&demean(ds.values()), 1, 25).unwrap();
        let at = problem.solve(problem.lambda_max() * 1.0001, 0.0, &SolverOptions::default());
        assert!(at.beta.iter().all(|m| m.amax() == 0.0));
        let below = problem.solve(problem.lambda_max() * 0.5, 0.0, &SolverOptions::default());
        assert!(below.beta.iter().any(|m| m.amax() > 0.0));
    }

    #[test]
    fn preconditions() {
        let ds = stable_series(100, 5);
        assert!(matches!(bss_detect(&ds, 1, 3, 0.1, 0.0), Err(Error::InvalidArgument(_))));
        assert!(matches!(bss_detect(&ds, 1, 60, 0.1, 0.0), Err(Error::InsufficientData(_))));
        assert!(bss_detect(&ds, 1, 20, -1.0, 0.0).is_err());
        assert!(lic_screen(&ds, &[50, 40], 1, 10, 1.0).is_err());
        assert!(lic_screen(&ds, &[50], 1, 3, 1.0).is_err());
    }

    #[test]
    fn empty_candidates_give_single_segment() {
        let ds = stable_series(200, 6);
        let r = lic_screen(&ds, &[], 1, 15, 10.0).unwrap();
        assert!(r.breaks.is_empty());
        assert_eq!(r.segments.len(), 1);
        assert_eq!((r.segments[0].start, r.segments[0].end), (1, 200));
    }

    #[test]
    fn screening_keeps_true_break_and_drops_spurious() {
        let ds = flip_series(1000, 500, 7);
        let cands = [200, 501, 800];
        let r = lic_screen(&ds, &cands, 1, 32, 4.0 * (999f64).ln()).unwrap();
        assert_eq!(r.breaks, vec![501]);
        assert!(r.breaks.iter().all(|b| cands.contains(b)));
        assert_eq!(r.segments.len(), 2);
        assert!(r.segments[0].model.coeffs[0][(0, 0)] > 0.3);
        assert!(r.segments[1].model.coeffs[0][(0, 0)] < -0.3);
    }

    #[test]
    fn greedy_path_handles_many_candidates() {
        let ds = flip_series(1000, 500, 8);
        let cands: Vec<usize> = (1..30).map(|i| 1 + i * 32).collect();
        let r = lic_screen(&ds, &cands, 1, 32, 4.0 * (999f64).ln()).unwrap();
        assert_eq!(r.breaks.len(), 1);
        assert!((r.breaks[0] as i64 - 500).abs() <= 32);
    }

    #[test]
    fn detects_a_coefficient_flip() {
        let ds = flip_series(1000, 500, 9);
        let r = detect_breaks(&ds, 1, &BreakOptions::default()).unwrap();
        assert_eq!(r.final_breaks.len(), 1);
        assert!((r.final_breaks[0] as i64 - 500).abs() <= r.tuning.block_length as i64);
        assert!(r.final_breaks.iter().all(|b| r.candidate_blocks.iter().any(|c| c.time == *b)));
        assert_eq!(r.tuning.block_length, 32);
    }

    #[test]
    fn stable_series_has_no_breaks() {
        let ds = stable_series(1000, 10);
        let r = detect_breaks(&ds, 1, &BreakOptions::default()).unwrap();
        assert!(r.final_breaks.is_empty());
        assert_eq!(r.segments.len(), 1);
    }
}
