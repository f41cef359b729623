use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use svarkit::breaks::bss::{default_block_length, lic_screen};
use svarkit::breaks::{cusum_covariance_test, detect_breaks, BreakOptions, CusumVariant};
use svarkit::simulate::{white_noise, Dgp};
use svarkit::stats::stream_rng;
use svarkit::TimeSeriesDataset;

const T: usize = 2000;
const REPS: u64 = 100;

fn flip(at: usize, seed: u64) -> TimeSeriesDataset {
    let a = DMatrix::identity(2, 2) * 0.6;
    let mut dgp = Dgp::var(vec![a.clone()], DMatrix::identity(2, 2));
    dgp.regime_change = Some((at, vec![-a]));
    TimeSeriesDataset::from_matrix(dgp.simulate(T, &mut stream_rng(seed, 0)).data).unwrap()
}

fn no_break(seed: u64) -> TimeSeriesDataset {
    let a = DMatrix::identity(2, 2) * 0.6;
    TimeSeriesDataset::from_matrix(Dgp::var(vec![a], DMatrix::identity(2, 2)).simulate(T, &mut stream_rng(seed, 0)).data).unwrap()
}

fn rate(hits: usize, n: u64) -> f64 {
    hits as f64 / n as f64
}

#[test]
fn candidate_set_covers_the_break() {
    let b = default_block_length(T - 1);
    let hits = (0..REPS)
        .into_par_iter()
        .filter(|&s| {
            let r = detect_breaks(&flip(T / 2, 100 + s), 1, &BreakOptions::default()).unwrap();
            r.candidate_blocks.iter().any(|c| (c.time as i64 - (T / 2) as i64).abs() <= b as i64)
        })
        .count();
    assert!(rate(hits, REPS) >= 0.9, "coverage {hits}/{REPS}");
}

#[test]
fn few_candidates_without_a_break() {
    let hits = (0..REPS)
        .into_par_iter()
        .filter(|&s| detect_breaks(&no_break(200 + s), 1, &BreakOptions::default()).unwrap().candidate_blocks.len() <= 2)
        .count();
    assert!(rate(hits, REPS) >= 0.9, "{hits}/{REPS}");
}

#[test]
fn adjacent_candidates_straddling_a_break_collapse_to_one() {
    let b = default_block_length(T - 1);
    let omega = 4.0 * ((T - 1) as f64).ln();
    let left = 1 + 22 * b;
    let hits = (0..REPS)
        .into_par_iter()
        .filter(|&s| {
            let at = stream_rng(300 + s, 1).random_range(left + 1..left + b);
            let r = lic_screen(&flip(at, 300 + s), &[left, left + b], 1, b, omega).unwrap();
            r.breaks.len() == 1
        })
        .count();
    assert!(rate(hits, REPS) >= 0.9, "{hits}/{REPS}");
}

#[test]
fn spurious_candidate_is_screened_out() {
    let b = default_block_length(T - 1);
    let omega = 4.0 * ((T - 1) as f64).ln();
    let (spurious, truth) = (1 + 11 * b, 1 + 22 * b);
    let hits = (0..REPS)
        .into_par_iter()
        .filter(|&s| lic_screen(&flip(truth, 400 + s), &[spurious, truth], 1, b, omega).unwrap().breaks == vec![truth])
        .count();
    assert!(rate(hits, REPS) >= 0.85, "{hits}/{REPS}");
}

fn unit(i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(2);
    v[i] = 1.0;
    v
}

fn cusum_rejection_rate(variant: CusumVariant, scale_second_half: f64, seed: u64) -> f64 {
    let rejections = (0..1000u64)
        .into_par_iter()
        .filter(|&s| {
            let mut y = white_noise(500, 2, &mut stream_rng(seed + s, 0));
            for t in 250..500 {
                y[(t, 0)] *= scale_second_half;
            }
            let r = cusum_covariance_test(&TimeSeriesDataset::from_matrix(y).unwrap(), &unit(0), &unit(0), variant).unwrap();
            r.reject[1].1
        })
        .count();
    rejections as f64 / 1000.0
}

#[test]
fn cusum_max_deviation_size_and_power() {
    let size = cusum_rejection_rate(CusumVariant::MaxDeviation, 1.0, 5_000);
    assert!((0.03..=0.08).contains(&size), "size {size}");
    let power = cusum_rejection_rate(CusumVariant::MaxDeviation, 2f64.sqrt(), 6_000);
    assert!(power >= 0.9, "power {power}");
}
