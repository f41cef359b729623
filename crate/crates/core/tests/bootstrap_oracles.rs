use nalgebra::DMatrix;
use svarkit::bootstrap::{irf_ci, mbb_distribution, BootScheme, BootstrapConfig};
use svarkit::simulate::Dgp;
use svarkit::stats::stream_rng;
use svarkit::{fit_var, TimeSeriesDataset};

fn sd(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

#[test]
fn bootstrap_sd_tracks_sampling_sd() {
    let truth = DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.2, 0.3]);
    let dgp = Dgp::var(vec![truth], DMatrix::identity(2, 2));
    let reps = 200;
    let mut estimates = vec![Vec::new(); 4];
    let mut boot_sd = vec![0.0; 4];
    for rep in 0..reps {
        let ds = TimeSeriesDataset::from_matrix(dgp.simulate(500, &mut stream_rng(31, rep)).data).unwrap();
        let m = fit_var(&ds, 1, true).unwrap();
        let draws = mbb_distribution(&m, &BootstrapConfig::new(999, 5000 + rep)).unwrap();
        assert_eq!(draws.block_length, 8);
        for c in 0..4 {
            estimates[c].push(m.coeffs[0][c]);
            let v: Vec<f64> = draws.successful().map(|f| f.coeffs[0][c]).collect();
            boot_sd[c] += sd(&v) / reps as f64;
        }
    }
    for c in 0..4 {
        let mc = sd(&estimates[c]);
        assert!((boot_sd[c] / mc - 1.0).abs() <= 0.25, "cell {c}: bootstrap {} vs MC {mc}", boot_sd[c]);
    }
}

#[test]
fn bands_cover_zero_responses_of_a_static_model() {
    let dgp = Dgp::var(vec![DMatrix::zeros(2, 2)], DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.4, 0.9]));
    let (mut inside, mut cells) = (0, 0);
    for rep in 0..100 {
        let ds = TimeSeriesDataset::from_matrix(dgp.simulate(300, &mut stream_rng(32, rep)).data).unwrap();
        let m = fit_var(&ds, 1, true).unwrap();
        let set = irf_ci(&m, &BootScheme::Recursive(vec![0, 1]), 6, &BootstrapConfig::new(199, 7000 + rep)).unwrap();
        let (lo, hi) = (set.lower.unwrap(), set.upper.unwrap());
        for h in 1..=6 {
            for (l, u) in lo[h].iter().zip(hi[h].iter()) {
                inside += usize::from(*l <= 0.0 && 0.0 <= *u);
                cells += 1;
            }
        }
    }
    let rate = inside as f64 / cells as f64;
    assert!(rate >= 0.85, "{rate}");
}
