use nalgebra::{DMatrix, DVector};
use svarkit::dynamics::irf;
use svarkit::ident::{identify_longrun, identify_recursive, identify_restricted, longrun_impact};
use svarkit::localproj::{fit_lp, lp_irf, Impulse};
use svarkit::simulate::{white_noise, Dgp};
use svarkit::stats::stream_rng;
use svarkit::{fit_var, TimeSeriesDataset};

fn data(dgp: &Dgp, t: usize, seed: u64, rep: u64) -> TimeSeriesDataset {
    TimeSeriesDataset::from_matrix(dgp.simulate(t, &mut stream_rng(seed, rep)).data).unwrap()
}

#[test]
fn longrun_scheme_recovers_cumulative_effects() {
    let a1 = DMatrix::from_row_slice(2, 2, &[0.4, 0.1, -0.2, 0.5]);
    let cumulative = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.6, 0.8]);
    // B = A(1)·Θ(1) makes the population long-run impact lower triangular
    let impact = (DMatrix::identity(2, 2) - &a1) * &cumulative;
    let dgp = Dgp::var(vec![a1], impact);
    for rep in 0..100 {
        let m = fit_var(&data(&dgp, 20_000, 21, rep), 1, true).unwrap();
        let lr = longrun_impact(&identify_longrun(&m).unwrap()).unwrap();
        assert!((lr - &cumulative).amax() < 0.1, "rep {rep}");
    }
}

fn j_rejection_rate(b21: f64, seed: u64) -> f64 {
    let impact = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, b21, 0.7]);
    let dgp = Dgp::var(vec![DMatrix::identity(2, 2) * 0.3], impact);
    // both off-diagonal impacts restricted to zero: one more restriction than needed
    let pattern = DMatrix::from_row_slice(2, 2, &[f64::NAN, 0.0, 0.0, f64::NAN]);
    let rejections = (0..500)
        .filter(|&rep| {
            let m = fit_var(&data(&dgp, 2000, seed, rep), 1, true).unwrap();
            let (_, j) = identify_restricted(&m, &pattern).unwrap();
            assert_eq!(j.df, 1);
            j.rejects(0.05)
        })
        .count();
    rejections as f64 / 500.0
}

#[test]
fn overidentification_test_size_and_power() {
    let size = j_rejection_rate(0.0, 22);
    assert!((0.02..=0.10).contains(&size), "size {size}");
    let power = j_rejection_rate(0.5, 23);
    assert!(power >= 0.9, "power {power}");
}

#[test]
fn local_projection_tracks_matrix_powers() {
    let a1 = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.4]);
    let ds = data(&Dgp::var(vec![a1.clone()], DMatrix::identity(2, 2)), 20_000, 24, 0);
    let mut power: DMatrix<f64> = DMatrix::identity(2, 2);
    for h in 0..=4 {
        for resp in 0..2 {
            let lp = fit_lp(&ds, h, 1, resp, &Impulse::Variables).unwrap();
            for j in 0..2 {
                assert!((lp.beta[j] - power[(resp, j)]).abs() < 0.05, "h {h} resp {resp} j {j}");
            }
        }
        power = &power * &a1;
    }
}

#[test]
fn local_projection_on_white_noise_is_insignificant() {
    let quiet = (0..200)
        .filter(|&rep| {
            let ds = TimeSeriesDataset::from_matrix(white_noise(500, 2, &mut stream_rng(25, rep))).unwrap();
            let lp = fit_lp(&ds, 3, 1, 0, &Impulse::Variables).unwrap();
            lp.beta.iter().zip(&lp.se).all(|(b, s)| b.abs() <= 3.0 * s)
        })
        .count();
    assert!(quiet >= 190, "{quiet}/200");
}

#[test]
fn local_projection_on_recovered_shock_matches_var_responses() {
    let impact = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.8]);
    let dgp = Dgp::var(vec![DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.3])], impact);
    let ds = data(&dgp, 20_000, 26, 0);
    let m = fit_var(&ds, 1, true).unwrap();
    let sm = identify_recursive(&m, &[0, 1]).unwrap();
    let var = irf(&sm, 4).theta;
    let shocks = sm.impact.clone().try_inverse().unwrap() * m.residuals.transpose();
    for k in 0..2 {
        let series = DVector::from_iterator(shocks.ncols(), shocks.row(k).iter().copied());
        let lp = lp_irf(&ds, 4, 1, &series, 1).unwrap();
        for h in 0..=4 {
            for i in 0..2 {
                assert!((lp.theta[h][(i, 0)] - var[h][(i, k)]).abs() < 0.1, "shock {k} h {h} var {i}");
            }
        }
    }
}
