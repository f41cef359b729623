//! Impulse responses, variance decompositions, historical decompositions and
//! generalized-FEVD connectedness.

use nalgebra::DMatrix;

use crate::data::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::ident::StructuralModel;
use crate::linalg::chol_lower;
use crate::var::{ma_coefficients, VarModel};

/// `theta[h]` is the d×d response matrix at horizon h (rows respond, columns are shocks).
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponseSet {
    pub theta: Vec<DMatrix<f64>>,
    pub lower: Option<Vec<DMatrix<f64>>>,
    pub upper: Option<Vec<DMatrix<f64>>>,
    pub shock_names: Vec<String>,
}

impl ImpulseResponseSet {
    pub fn new(theta: Vec<DMatrix<f64>>, shock_names: Vec<String>) -> Self {
        Self { theta, lower: None, upper: None, shock_names }
    }

    pub fn max_horizon(&self) -> usize {
        self.theta.len().saturating_sub(1)
    }

    pub fn responses(&self) -> usize {
        self.theta.first().map_or(0, |m| m.nrows())
    }

    pub fn shocks(&self) -> usize {
        self.theta.first().map_or(0, |m| m.ncols())
    }
}

/// `Θ_h = Φ_h · impact`, h = 0..=H.
pub fn irf(sm: &StructuralModel, horizon: usize) -> ImpulseResponseSet {
    let theta = ma_coefficients(&sm.base, horizon).into_iter().map(|phi| phi * &sm.impact).collect();
    ImpulseResponseSet::new(theta, sm.shock_names.clone())
}

/// `shares[h-1][(j, k)]` is the fraction of variable j's h-step forecast-error variance due to shock k.
#[derive(Debug, Clone, PartialEq)]
pub struct FevdTable {
    pub shares: Vec<DMatrix<f64>>,
}

impl FevdTable {
    pub fn horizons(&self) -> usize {
        self.shares.len()
    }

    pub fn at(&self, h: usize) -> &DMatrix<f64> {
        &self.shares[h - 1]
    }
}

fn require_full(sm: &StructuralModel) -> Result<()> {
    if sm.is_full() {
        Ok(())
    } else {
        Err(Error::InvalidArgument("decomposition needs every shock identified".into()))
    }
}

pub fn fevd(sm: &StructuralModel, horizon: usize) -> Result<FevdTable> {
    require_full(sm)?;
    if horizon == 0 {
        return Err(Error::InvalidArgument("FEVD horizon must be ≥ 1".into()));
    }
    let d = sm.base.dim();
    let theta = irf(sm, horizon - 1).theta;
    let mut cum = DMatrix::<f64>::zeros(d, d);
    let mut shares = Vec::with_capacity(horizon);
    for th in &theta {
        cum += th.component_mul(th);
        let mut s = cum.clone();
        for j in 0..d {
            let total: f64 = cum.row(j).sum();
            if !(total > 0.0) {
                return Err(Error::DegenerateVariance(j));
            }
            for k in 0..d {
                s[(j, k)] /= total;
            }
        }
        shares.push(s);
    }
    Ok(FevdTable { shares })
}

/// Rows are aligned with the effective sample (observation `start + t` for row t).
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalDecomposition {
    pub start: usize,
    /// `contributions[k]` is n×d: the part of each variable driven by shock k.
    pub contributions: Vec<DMatrix<f64>>,
    /// Initial conditions and deterministic terms.
    pub remainder: DMatrix<f64>,
    pub observed: DMatrix<f64>,
    /// n×d recovered structural shocks.
    pub shocks: DMatrix<f64>,
}

pub(crate) fn decompose_with_shocks(theta: &[DMatrix<f64>], shocks: &DMatrix<f64>, observed: &DMatrix<f64>) -> (Vec<DMatrix<f64>>, DMatrix<f64>) {
    let (n, d) = observed.shape();
    let nshock = shocks.ncols();
    let mut contributions = vec![DMatrix::zeros(n, d); nshock];
    for (k, contrib) in contributions.iter_mut().enumerate() {
        for t in 0..n {
            for s in 0..=t {
                let w = shocks[(t - s, k)];
                if w == 0.0 {
                    continue;
                }
                for i in 0..d {
                    contrib[(t, i)] += theta[s][(i, k)] * w;
                }
            }
        }
    }
    let mut remainder = observed.clone();
    for c in &contributions {
        remainder -= c;
    }
    (contributions, remainder)
}

pub fn historical_decomposition(sm: &StructuralModel, ds: &TimeSeriesDataset) -> Result<HistoricalDecomposition> {
    require_full(sm)?;
    let m = &sm.base;
    let d = m.dim();
    if ds.dim() != d {
        return Err(Error::Shape(format!("dataset has {} variables, model {d}", ds.dim())));
    }
    let n = m.residuals.nrows();
    if n == 0 || ds.nobs() != n + m.p {
        return Err(Error::Shape("dataset does not match the model's estimation sample".into()));
    }
    let inv = sm.impact.clone().try_inverse().ok_or(Error::SingularImpact)?;
    let shocks = &m.residuals * inv.transpose();
    let theta = irf(sm, n - 1).theta;
    let observed = ds.values().rows(m.p, n).into_owned();
    let (contributions, remainder) = decompose_with_shocks(&theta, &shocks, &observed);
    Ok(HistoricalDecomposition { start: m.p, contributions, remainder, observed, shocks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConnectednessTable {
    pub horizon: usize,
    pub raw: DMatrix<f64>,
    /// Row-normalised shares; entry (i, j) is the part of i's variance attributed to j.
    pub normalized: DMatrix<f64>,
    /// Received from others: off-diagonal row sums.
    pub from: Vec<f64>,
    /// Transmitted to others: off-diagonal column sums.
    pub to: Vec<f64>,
    /// `to − from`
    pub net: Vec<f64>,
    pub total: f64,
}

/// Generalized forecast-error variance decomposition over horizons 0..H−1 and its
/// directional spillover measures.
pub fn gfevd_connectedness(m: &VarModel, horizon: usize) -> Result<ConnectednessTable> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("connectedness horizon must be ≥ 1".into()));
    }
    let d = m.dim();
    chol_lower(&m.sigma_u)?;
    let sigma = &m.sigma_u;
    let phi = ma_coefficients(m, horizon - 1);
    let mut num = DMatrix::<f64>::zeros(d, d);
    let mut den = vec![0.0; d];
    for ph in &phi {
        let ps = ph * sigma;
        let psp = &ps * ph.transpose();
        for i in 0..d {
            den[i] += psp[(i, i)];
            for j in 0..d {
                num[(i, j)] += ps[(i, j)] * ps[(i, j)];
            }
        }
    }
    let raw = DMatrix::from_fn(d, d, |i, j| num[(i, j)] / (sigma[(j, j)] * den[i]));
    let mut normalized = raw.clone();
    for i in 0..d {
        let s: f64 = raw.row(i).sum();
        for j in 0..d {
            normalized[(i, j)] /= s;
        }
    }
    let from: Vec<f64> = (0..d).map(|i| (0..d).filter(|&j| j != i).map(|j| normalized[(i, j)]).sum()).collect();
    let to: Vec<f64> = (0..d).map(|j| (0..d).filter(|&i| i != j).map(|i| normalized[(i, j)]).sum()).collect();
    let net = to.iter().zip(&from).map(|(t, f)| t - f).collect();
    let total = from.iter().sum::<f64>() / d as f64;
    Ok(ConnectednessTable { horizon, raw, normalized, from, to, net, total })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ident::identify_recursive;
    use crate::simulate::Dgp;
    use crate::stats::stream_rng;
    use crate::var::fit_var;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn model(coeffs: Vec<DMatrix<f64>>, sigma: DMatrix<f64>) -> VarModel {
        VarModel::from_parts(coeffs, None, sigma).unwrap()
    }

    fn bivariate() -> VarModel {
        model(
            vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.4])],
            DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 0.5]),
        )
    }

    #[test]
    fn impact_is_horizon_zero() {
        let sm = identify_recursive(&bivariate(), &[0, 1]).unwrap();
        let r = irf(&sm, 5);
        assert_eq!(r.theta[0], sm.impact);
        assert_eq!(r.max_horizon(), 5);
    }

    #[test]
    fn var1_responses_are_matrix_powers() {
        let m = bivariate();
        let sm = identify_recursive(&m, &[0, 1]).unwrap();
        let l = chol_lower(&m.sigma_u).unwrap();
        let r = irf(&sm, 6);
        let mut pow = DMatrix::identity(2, 2);
        for h in 0..=6 {
            assert!((&r.theta[h] - &pow * &l).abs().max() < 1e-14);
            pow *= &m.coeffs[0];
        }
    }

    #[test]
    fn static_model_has_no_propagation() {
        let sm = identify_recursive(&model(vec![DMatrix::zeros(2, 2)], DMatrix::identity(2, 2)), &[0, 1]).unwrap();
        let r = irf(&sm, 3);
        assert!(r.theta[1..].iter().all(|t| t.iter().all(|v| *v == 0.0)));
    }

    #[test]
    fn diagonal_system_fevd_is_own_shock() {
        let m = model(
            vec![DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.5, -0.3]))],
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 0.5])),
        );
        let f = fevd(&identify_recursive(&m, &[0, 1]).unwrap(), 8).unwrap();
        for h in 1..=8 {
            assert!((f.at(h) - DMatrix::identity(2, 2)).abs().max() < 1e-15);
        }
    }

    #[test]
    fn fevd_matches_brute_force_sums() {
        let m = bivariate();
        let sm = identify_recursive(&m, &[0, 1]).unwrap();
        let f = fevd(&sm, 5).unwrap();
        let l = chol_lower(&m.sigma_u).unwrap();
        let a = &m.coeffs[0];
        for h in 1..=5 {
            for j in 0..2 {
                let mut contrib = [0.0; 2];
                let mut pow = DMatrix::identity(2, 2);
                for _ in 0..h {
                    let th = &pow * &l;
                    for k in 0..2 {
                        contrib[k] += th[(j, k)] * th[(j, k)];
                    }
                    pow = a * pow;
                }
                let total = contrib[0] + contrib[1];
                for k in 0..2 {
                    assert_relative_eq!(f.at(h)[(j, k)], contrib[k] / total, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn fevd_flags_zero_variance() {
        let sm = StructuralModel { impact: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]), ..identify_recursive(&bivariate(), &[0, 1]).unwrap() };
        let sm = StructuralModel { base: model(vec![DMatrix::zeros(2, 2)], DMatrix::identity(2, 2)), ..sm };
        assert!(matches!(fevd(&sm, 3), Err(Error::DegenerateVariance(1))));
    }

    #[test]
    fn single_impulse_traces_response_columns() {
        let sm = identify_recursive(&bivariate(), &[0, 1]).unwrap();
        let n = 12;
        let theta = irf(&sm, n - 1).theta;
        let mut shocks = DMatrix::zeros(n, 2);
        shocks[(0, 1)] = 1.0;
        let observed = DMatrix::zeros(n, 2);
        let (contrib, _) = decompose_with_shocks(&theta, &shocks, &observed);
        for t in 0..n {
            for i in 0..2 {
                assert_eq!(contrib[1][(t, i)], theta[t][(i, 1)]);
                assert_eq!(contrib[0][(t, i)], 0.0);
            }
        }
    }

    #[test]
    fn historical_decomposition_is_additive() {
        let dgp = Dgp { intercept: Some(nalgebra::DVector::from_vec(vec![1.0, -0.5])), ..Dgp::var(bivariate().coeffs, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.6])) };
        let sim = dgp.simulate(200, &mut stream_rng(4, 0));
        let ds = TimeSeriesDataset::from_matrix(sim.data).unwrap();
        let m = fit_var(&ds, 2, true).unwrap();
        let sm = identify_recursive(&m, &[0, 1]).unwrap();
        let hd = historical_decomposition(&sm, &ds).unwrap();
        let mut total = hd.remainder.clone();
        for c in &hd.contributions {
            total += c;
        }
        let rel = (&total - &hd.observed).norm() / hd.observed.norm();
        assert!(rel < 1e-9);
        assert_eq!(hd.start, 2);
        assert_eq!(hd.observed.nrows(), 198);
    }

    #[test]
    fn zero_shocks_leave_everything_in_remainder() {
        let sm = identify_recursive(&bivariate(), &[0, 1]).unwrap();
        let theta = irf(&sm, 9).theta;
        let y = DMatrix::from_fn(10, 2, |r, c| (r + c) as f64);
        let (contrib, rem) = decompose_with_shocks(&theta, &DMatrix::zeros(10, 2), &y);
        assert!(contrib.iter().all(|c| c.iter().all(|v| *v == 0.0)));
        assert_eq!(rem, y);
    }

    #[test]
    fn gfevd_hand_example() {
        let m = model(vec![DMatrix::zeros(2, 2)], DMatrix::from_row_slice(2, 2, &[1.0, 0.9, 0.9, 1.0]));
        let c = gfevd_connectedness(&m, 1).unwrap();
        assert_relative_eq!(c.raw[(0, 1)], 0.81, max_relative = 1e-12);
        assert_relative_eq!(c.normalized[(0, 1)], 0.81 / 1.81, max_relative = 1e-12);
        assert_relative_eq!(c.total, 0.81 / 1.81, max_relative = 1e-12);
        assert_relative_eq!(c.net[0], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn gfevd_without_spillover_is_identity() {
        let m = model(
            vec![DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![0.4, 0.2, -0.5]))],
            DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 3.0, 0.2])),
        );
        let c = gfevd_connectedness(&m, 10).unwrap();
        assert!((c.normalized - DMatrix::identity(3, 3)).abs().max() < 1e-15);
        assert_eq!(c.total, 0.0);
    }

    proptest! {
        #[test]
        fn gfevd_rows_normalised_and_scale_invariant(
            a in proptest::collection::vec(-0.4f64..0.4, 4),
            rho in -0.9f64..0.9,
            s1 in 0.2f64..5.0, s2 in 0.2f64..5.0,
            h in 1usize..12,
        ) {
            let coeffs = vec![DMatrix::from_column_slice(2, 2, &a)];
            let sigma = DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0]);
            let c = gfevd_connectedness(&model(coeffs.clone(), sigma.clone()), h).unwrap();
            for i in 0..2 {
                prop_assert!((c.normalized.row(i).sum() - 1.0).abs() < 1e-12);
            }
            prop_assert!((0.0..=1.0).contains(&c.total));
            let dm = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![s1, s2]));
            let dinv = dm.clone().try_inverse().unwrap();
            let scaled = model(vec![&dm * &coeffs[0] * &dinv], &dm * &sigma * &dm);
            let cs = gfevd_connectedness(&scaled, h).unwrap();
            prop_assert!((cs.normalized - c.normalized).abs().max() < 1e-10);
        }

        #[test]
        fn fevd_shares_sum_to_one(
            a in proptest::collection::vec(-0.4f64..0.4, 4),
            rho in -0.9f64..0.9,
            h in 1usize..10,
        ) {
            let m = model(vec![DMatrix::from_column_slice(2, 2, &a)], DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 2.0]));
            let f = fevd(&identify_recursive(&m, &[0, 1]).unwrap(), h).unwrap();
            for s in &f.shares {
                for j in 0..2 {
                    prop_assert!((s.row(j).sum() - 1.0).abs() < 1e-10);
                    prop_assert!(s.row(j).iter().all(|v| *v >= 0.0));
                }
            }
        }
    }
}
