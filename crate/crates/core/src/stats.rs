//! Reference distributions and the common test-result carrier.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Outcome of a Wald/J/CUSUM-type test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    /// Smallest of 1%, 5%, 10% at which the null is rejected.
    pub rejected_at: Option<f64>,
}

impl TestResult {
    pub fn chi2(statistic: f64, df: usize) -> Self {
        let statistic = statistic.max(0.0);
        let p_value = chi2_sf(statistic, df);
        Self::from_p(statistic, df, p_value)
    }

    pub fn from_p(statistic: f64, df: usize, p_value: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        let rejected_at = [0.01, 0.05, 0.10].into_iter().find(|&a| p_value < a);
        Self { statistic, df, p_value, rejected_at }
    }

    pub fn rejects(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Upper tail probability of a χ² variable; `df = 0` is the point mass at zero.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return if x > 0.0 { 0.0 } else { 1.0 };
    }
    if x <= 0.0 {
        return 1.0;
    }
    let dist = ChiSquared::new(df as f64).expect("positive df");
    dist.sf(x)
}

pub fn chi2_cdf(x: f64, df: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    ChiSquared::new(df).expect("positive df").cdf(x)
}

pub fn chi2_quantile(prob: f64, df: f64) -> f64 {
    ChiSquared::new(df).expect("positive df").inverse_cdf(prob)
}

pub fn normal_quantile(prob: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(prob)
}

/// Consistency factor for a trimmed multivariate-normal scatter:
/// `(1 - alpha) / F_{χ²_{d+2}}(q)` with `q` the upper-`alpha` quantile of `χ²_d`.
pub fn trimmed_consistency_factor(alpha: f64, d: usize) -> f64 {
    if alpha <= 0.0 {
        return 1.0;
    }
    let q = chi2_quantile(1.0 - alpha, d as f64);
    (1.0 - alpha) / chi2_cdf(q, d as f64 + 2.0)
}

/// Deterministic random stream keyed by `(seed, stream)`; draws within the stream are
/// addressed by their position, so replicate `i` is reproducible independent of evaluation order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
