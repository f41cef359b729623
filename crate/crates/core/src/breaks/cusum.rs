//! CUSUM tests for a change in a bilinear functional `v′ E[y_t y_t′] w` of the second moments.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::linalg::quantile_sorted;
use crate::stats::stream_rng;

/// Smallest p-value the cached table can resolve.
pub const P_VALUE_FLOOR: f64 = 1e-4;

/// `−ζ(1/2)/√(2π)`, the overshoot constant of a Gaussian random walk.
pub const DISCRETE_SUP_GAP: f64 = 0.5826;

/// Levels at which critical values and rejection flags are reported.
pub const LEVELS: [f64; 3] = [0.10, 0.05, 0.01];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CusumVariant {
    /// `max_k |D_k|`, limit `sup |B°(t)|`.
    Endpoint,
    /// `max_k D_k − min_k D_k`, limit `sup_{s<t} |B°(s) − B°(t)|`.
    MaxDeviation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CusumResult {
    pub variant: CusumVariant,
    /// Normalised statistic.
    pub statistic: f64,
    /// Long-run standard deviation used for normalisation.
    pub long_run_sd: f64,
    /// Number of observations before the estimated change.
    pub max_location: usize,
    /// For the max-deviation variant, the sub-interval `(start, end]` whose mean deviates most.
    pub interval: Option<(usize, usize)>,
    pub p_value: f64,
    /// `(level, critical value)`
    pub critical_values: Vec<(f64, f64)>,
    /// `(level, rejected)`
    pub reject: Vec<(f64, bool)>,
}

/// Quantiles of `sup |B°|` and `sup_{s<t} |B°(s) − B°(t)|` over a probability grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BridgeTable {
    pub paths: usize,
    pub grid: usize,
    pub seed: u64,
    pub probs: Vec<f64>,
    pub kolmogorov: Vec<f64>,
    pub kuiper: Vec<f64>,
}

pub fn table_probs() -> Vec<f64> {
    let mut p: Vec<f64> = (1..1000).map(|i| i as f64 / 1000.0).collect();
    p.extend([0.9995, 0.9999]);
    p
}

/// Simulates Brownian bridges on `grid` equal steps; path `i` uses RNG stream `i`.
pub fn simulate_bridge_table(paths: usize, grid: usize, seed: u64) -> BridgeTable {
    let draws: Vec<(f64, f64)> = (0..paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let sd = (1.0 / grid as f64).sqrt();
            let mut walk = Vec::with_capacity(grid + 1);
            walk.push(0.0);
            let mut w = 0.0;
            for _ in 0..grid {
                w += sd * rng.sample::<f64, _>(StandardNormal);
                walk.push(w);
            }
            let (mut hi, mut lo, mut abs) = (0.0f64, 0.0f64, 0.0f64);
            for (k, wk) in walk.iter().enumerate() {
                let b = wk - (k as f64 / grid as f64) * w;
                hi = hi.max(b);
                lo = lo.min(b);
                abs = abs.max(b.abs());
            }
            (abs, hi - lo)
        })
        .collect();
    let mut ks: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let mut kp: Vec<f64> = draws.iter().map(|d| d.1).collect();
    ks.sort_by(f64::total_cmp);
    kp.sort_by(f64::total_cmp);
    let probs = table_probs();
    BridgeTable {
        paths,
        grid,
        seed,
        kolmogorov: probs.iter().map(|&p| quantile_sorted(&ks, p)).collect(),
        kuiper: probs.iter().map(|&p| quantile_sorted(&kp, p)).collect(),
        probs,
    }
}

impl BridgeTable {
    pub fn to_csv(&self) -> String {
        let mut s = format!("# paths={} grid={} seed={}\nprob,kolmogorov,kuiper\n", self.paths, self.grid, self.seed);
        for i in 0..self.probs.len() {
            s.push_str(&format!("{},{:.6},{:.6}\n", self.probs[i], self.kolmogorov[i], self.kuiper[i]));
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut meta = (0usize, 0usize, 0u64);
        for line in text.lines().filter(|l| l.starts_with('#')) {
            for kv in line.trim_start_matches('#').split_whitespace() {
                let parse_err = || Error::Parse { row: 0, col: 0, msg: format!("bad table metadata '{kv}'") };
                match kv.split_once('=') {
                    Some(("paths", v)) => meta.0 = v.parse().map_err(|_| parse_err())?,
                    Some(("grid", v)) => meta.1 = v.parse().map_err(|_| parse_err())?,
                    Some(("seed", v)) => meta.2 = v.parse().map_err(|_| parse_err())?,
                    _ => {}
                }
            }
        }
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let (mut probs, mut ks, mut kp) = (Vec::new(), Vec::new(), Vec::new());
        for (row, rec) in rdr.deserialize::<(f64, f64, f64)>().enumerate() {
            let (p, a, b) = rec.map_err(|e| Error::Parse { row: row + 1, col: 0, msg: e.to_string() })?;
            probs.push(p);
            ks.push(a);
            kp.push(b);
        }
        if probs.len() < 2 {
            return Err(Error::Parse { row: 0, col: 0, msg: "critical-value table is empty".into() });
        }
        Ok(Self { paths: meta.0, grid: meta.1, seed: meta.2, probs, kolmogorov: ks, kuiper: kp })
    }

    fn column(&self, variant: CusumVariant) -> &[f64] {
        match variant {
            CusumVariant::Endpoint => &self.kolmogorov,
            CusumVariant::MaxDeviation => &self.kuiper,
        }
    }

    /// Quantile of the limit law at `prob` by linear interpolation in the table.
    pub fn quantile(&self, variant: CusumVariant, prob: f64) -> f64 {
        let q = self.column(variant);
        let i = self.probs.partition_point(|&p| p < prob).clamp(1, self.probs.len() - 1);
        let (p0, p1) = (self.probs[i - 1], self.probs[i]);
        let t = ((prob - p0) / (p1 - p0)).clamp(0.0, 1.0);
        q[i - 1] + t * (q[i] - q[i - 1])
    }

    /// Expected gap between the table's supremum and one over `n` equally spaced points:
    /// each extreme of a discretely sampled bridge falls short by about `0.5826 · √Δ`.
    pub fn grid_shift(&self, variant: CusumVariant, n: usize) -> f64 {
        if self.grid == 0 {
            return 0.0;
        }
        let extremes = match variant {
            CusumVariant::Endpoint => 1.0,
            CusumVariant::MaxDeviation => 2.0,
        };
        extremes * DISCRETE_SUP_GAP * ((n as f64).recip().sqrt() - (self.grid as f64).recip().sqrt())
    }

    /// Upper-tail probability, floored at [`P_VALUE_FLOOR`].
    pub fn p_value(&self, variant: CusumVariant, stat: f64) -> f64 {
        let q = self.column(variant);
        let n = q.len();
        if stat <= q[0] {
            return 1.0 - self.probs[0] * (stat / q[0]).max(0.0);
        }
        if stat >= q[n - 1] {
            return P_VALUE_FLOOR;
        }
        let i = q.partition_point(|&v| v < stat);
        let t = if q[i] > q[i - 1] { (stat - q[i - 1]) / (q[i] - q[i - 1]) } else { 1.0 };
        let cdf = self.probs[i - 1] + t * (self.probs[i] - self.probs[i - 1]);
        (1.0 - cdf).max(P_VALUE_FLOOR)
    }
}

/// The table shipped with the library.
pub fn bridge_table() -> &'static BridgeTable {
    static TABLE: OnceLock<BridgeTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        BridgeTable::from_csv(include_str!("../../data/bridge_critvals.csv")).expect("bundled critical-value table parses")
    })
}

/// `P(sup |B°| > x)`
pub fn kolmogorov_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let s: f64 = (1..=100).map(|k| {
        let k = k as f64;
        (if k as u64 % 2 == 1 { 2.0 } else { -2.0 }) * (-2.0 * k * k * x * x).exp()
    }).sum();
    s.clamp(0.0, 1.0)
}

/// `P(sup_{s<t} |B°(s) − B°(t)| > x)`
pub fn kuiper_sf(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let s: f64 = (1..=100).map(|k| {
        let k2 = (k * k) as f64;
        2.0 * (4.0 * k2 * x * x - 1.0) * (-2.0 * k2 * x * x).exp()
    }).sum();
    s.clamp(0.0, 1.0)
}

/// Bartlett long-run variance with bandwidth `⌈n^{1/3}⌉` of a demeaned series.
pub(crate) fn bartlett_lrv(x: &[f64]) -> f64 {
    let n = x.len();
    let bw = (n as f64).cbrt().ceil() as usize;
    let gamma = |l: usize| (l..n).map(|t| x[t] * x[t - l]).sum::<f64>() / n as f64;
    let mut v = gamma(0);
    for l in 1..=bw.min(n - 1) {
        v += 2.0 * (1.0 - l as f64 / (bw as f64 + 1.0)) * gamma(l);
    }
    v
}

pub fn cusum_covariance_test(
    ds: &TimeSeriesDataset,
    v: &DVector<f64>,
    w: &DVector<f64>,
    variant: CusumVariant,
) -> Result<CusumResult> {
    cusum_with_table(ds, v, w, variant, bridge_table())
}

pub fn cusum_with_table(
    ds: &TimeSeriesDataset,
    v: &DVector<f64>,
    w: &DVector<f64>,
    variant: CusumVariant,
    table: &BridgeTable,
) -> Result<CusumResult> {
    let n = ds.nobs();
    let d = ds.dim();
    if n < 20 {
        return Err(Error::Shape(format!("CUSUM needs at least 20 observations, got {n}")));
    }
    if v.len() != d || w.len() != d {
        return Err(Error::Shape(format!("weight vectors must have length {d}")));
    }
    for u in [v, w] {
        if u.iter().any(|x| !x.is_finite()) || u.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidArgument("weight vectors must be finite and nonzero".into()));
        }
    }
    let y = demean(ds.values());
    let scale = y.iter().map(|a| a * a).sum::<f64>() / (n * d) as f64;
    let x: Vec<f64> = (0..n).map(|t| {
        let row = y.row(t);
        (row * v)[0] * (row * w)[0]
    }).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let centred: Vec<f64> = x.iter().map(|a| a - mean).collect();
    let lrv = bartlett_lrv(&centred);
    let tiny = 1e-24 * (scale * scale * v.norm_squared() * w.norm_squared());
    if !(lrv > tiny) {
        return Err(Error::DegenerateSeries(format!("long-run variance of the CUSUM summand is {lrv:e}")));
    }
    let sd = lrv.sqrt();
    // D_k = S_k − (k/n) S_n = cumulative sum of the centred summand
    let mut dk = Vec::with_capacity(n);
    let mut acc = 0.0;
    for c in &centred {
        acc += c;
        dk.push(acc);
    }
    let argmax = |f: &dyn Fn(f64) -> f64| {
        (0..n).fold(0, |best, k| if f(dk[k]) > f(dk[best]) { k } else { best })
    };
    let root_n = (n as f64).sqrt();
    let (statistic, max_location, interval) = match variant {
        CusumVariant::Endpoint => {
            let k = argmax(&|a| a.abs());
            (dk[k].abs() / (root_n * sd), k + 1, None)
        }
        CusumVariant::MaxDeviation => {
            let hi = argmax(&|a| a);
            let lo = argmax(&|a| -a);
            let (a, b) = (hi.min(lo) + 1, hi.max(lo) + 1);
            ((dk[hi] - dk[lo]) / (root_n * sd), a, Some((a, b)))
        }
    };
    // the statistic is a supremum over n points, the table over `grid` points
    let shift = table.grid_shift(variant, n);
    let critical_values: Vec<(f64, f64)> = LEVELS.iter().map(|&l| (l, table.quantile(variant, 1.0 - l) - shift)).collect();
    let reject = critical_values.iter().map(|&(l, c)| (l, statistic > c)).collect();
    Ok(CusumResult {
        variant,
        statistic,
        long_run_sd: sd,
        max_location,
        interval,
        p_value: table.p_value(variant, statistic + shift),
        critical_values,
        reject,
    })
}

pub(crate) fn demean(values: &DMatrix<f64>) -> DMatrix<f64> {
    let n = values.nrows() as f64;
    let mut y = values.clone();
    for mut col in y.column_iter_mut() {
        let m = col.sum() / n;
        col.add_scalar_mut(-m);
    }
    debug_assert!(y.column_iter().all(|c| c.sum().abs() <= 1e-8 * (1.0 + c.amax()) * n));
    y
}
