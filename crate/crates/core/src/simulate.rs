//! Data-generating processes used by the Monte-Carlo oracles and the `simulate` command.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::var::companion_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Innovations {
    Gaussian,
    /// `u_t = σ_t ε_t`, `σ²_t = omega + alpha · u²_{t−1}` componentwise, before the impact map.
    Arch { omega: f64, alpha: f64 },
}

/// VAR(p) data-generating process `y_t = ν + Σ A_j y_{t−j} + B w_t`.
#[derive(Debug, Clone)]
pub struct Dgp {
    pub coeffs: Vec<DMatrix<f64>>,
    pub intercept: Option<DVector<f64>>,
    /// Maps structural shocks to reduced-form errors.
    pub impact: DMatrix<f64>,
    pub innovations: Innovations,
    /// Lag matrices in force from the given (post burn-in) row onward.
    pub regime_change: Option<(usize, Vec<DMatrix<f64>>)>,
    pub burn_in: usize,
}

#[derive(Debug, Clone)]
pub struct Simulated {
    /// T×d observations.
    pub data: DMatrix<f64>,
    /// T×d structural shocks `w_t` (unit variance for Gaussian innovations).
    pub shocks: DMatrix<f64>,
    /// T×d reduced-form errors `u_t = B w_t`.
    pub errors: DMatrix<f64>,
}

impl Dgp {
    pub fn var(coeffs: Vec<DMatrix<f64>>, impact: DMatrix<f64>) -> Self {
        Self { coeffs, intercept: None, impact, innovations: Innovations::Gaussian, regime_change: None, burn_in: 200 }
    }

    pub fn dim(&self) -> usize {
        self.impact.nrows()
    }

    pub fn spectral_radius(&self) -> f64 {
        let rho = |c: &[DMatrix<f64>]| {
            if c.is_empty() {
                return 0.0;
            }
            companion_matrix(c).complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
        };
        let mut r = rho(&self.coeffs);
        if let Some((_, c)) = &self.regime_change {
            r = r.max(rho(c));
        }
        r
    }

    pub fn validate(&self, allow_unstable: bool) -> Result<()> {
        let d = self.dim();
        if self.impact.ncols() != d {
            return Err(Error::Shape("impact must be square".into()));
        }
        let lags_ok = |c: &[DMatrix<f64>]| c.iter().all(|a| a.shape() == (d, d));
        if !lags_ok(&self.coeffs) || self.regime_change.as_ref().is_some_and(|(_, c)| !lags_ok(c)) {
            return Err(Error::Shape("lag matrices must be d×d".into()));
        }
        if let Some((_, c)) = &self.regime_change {
            if c.len() != self.coeffs.len() {
                return Err(Error::Shape("both regimes need the same lag order".into()));
            }
        }
        let rho = self.spectral_radius();
        if !allow_unstable && rho >= 1.0 {
            return Err(Error::UnstableDgp(rho));
        }
        Ok(())
    }

    /// Draws `t` observations after discarding `burn_in` rows started from zero.
    pub fn simulate<R: Rng + ?Sized>(&self, t: usize, rng: &mut R) -> Simulated {
        let d = self.dim();
        let p = self.coeffs.len();
        let total = t + self.burn_in;
        let mut y = DMatrix::zeros(total, d);
        let mut w_all = DMatrix::zeros(total, d);
        let mut u_all = DMatrix::zeros(total, d);
        let mut prev_u: DVector<f64> = DVector::zeros(d);
        for tt in 0..total {
            let eps = DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
            let w = match self.innovations {
                Innovations::Gaussian => eps,
                Innovations::Arch { omega, alpha } => {
                    DVector::from_iterator(d, (0..d).map(|i| (omega + alpha * prev_u[i] * prev_u[i]).sqrt() * eps[i]))
                }
            };
            let u: DVector<f64> = &self.impact * &w;
            let coeffs = match &self.regime_change {
                Some((at, c)) if tt >= self.burn_in + at => c,
                _ => &self.coeffs,
            };
            let mut yt: DVector<f64> = self.intercept.clone().unwrap_or_else(|| DVector::zeros(d));
            for j in 0..p.min(tt) {
                yt += &coeffs[j] * y.row(tt - j - 1).transpose();
            }
            yt += &u;
            y.set_row(tt, &yt.transpose());
            w_all.set_row(tt, &w.transpose());
            u_all.set_row(tt, &u.transpose());
            prev_u = match self.innovations {
                Innovations::Arch { .. } => w,
                Innovations::Gaussian => u,
            };
        }
        let b = self.burn_in;
        Simulated {
            data: y.rows(b, t).into_owned(),
            shocks: w_all.rows(b, t).into_owned(),
            errors: u_all.rows(b, t).into_owned(),
        }
    }
}

/// Draws an iid standard normal T×d matrix.
pub fn white_noise<R: Rng + ?Sized>(t: usize, d: usize, rng: &mut R) -> DMatrix<f64> {
    DMatrix::from_fn(t, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}
