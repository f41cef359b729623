//! Exact proximal operator of the (optionally anchored) one-dimensional total-variation penalty.

use std::collections::VecDeque;

/// Piecewise-linear non-decreasing function stored as left-end coefficients, right-end
/// coefficients and knots `(x, Δa, Δb)` where the slope/intercept change.
struct Pwl {
    left: (f64, f64),
    right: (f64, f64),
    knots: VecDeque<(f64, f64, f64)>,
}

impl Pwl {
    /// Generalised crossing point of `level`, consuming knots to its left. Returns the
    /// point and the coefficients of the segment that contains it.
    fn cross_from_left(&mut self, level: f64) -> (f64, (f64, f64)) {
        let (mut a, mut b) = self.left;
        let mut prev = f64::NEG_INFINITY;
        loop {
            match self.knots.front() {
                Some(&(x, da, db)) if a * x + b < level => {
                    self.knots.pop_front();
                    a += da;
                    b += db;
                    prev = x;
                }
                _ => {
                    let z = if a > 0.0 { ((level - b) / a).max(prev) } else { prev };
                    return (z, (a, b));
                }
            }
        }
    }

    fn cross_from_right(&mut self, level: f64) -> (f64, (f64, f64)) {
        let (mut a, mut b) = self.right;
        let mut prev = f64::INFINITY;
        loop {
            match self.knots.back() {
                Some(&(x, da, db)) if a * x + b > level => {
                    self.knots.pop_back();
                    a -= da;
                    b -= db;
                    prev = x;
                }
                _ => {
                    let z = if a > 0.0 { ((level - b) / a).min(prev) } else { prev };
                    return (z, (a, b));
                }
            }
        }
    }
}

/// `argmin_z ½‖z − v‖² + lambda · (Σ_{i≥1} |z_i − z_{i−1}| + [anchored] |z_0|)`.
pub fn tv_prox(v: &[f64], lambda: f64, anchored: bool) -> Vec<f64> {
    let k = v.len();
    if k == 0 {
        return Vec::new();
    }
    if lambda <= 0.0 {
        return v.to_vec();
    }
    // C_{i} is the clamped derivative of the value function carried into element i
    let mut c = if anchored {
        Pwl { left: (0.0, -lambda), right: (0.0, lambda), knots: VecDeque::from([(0.0, 0.0, 2.0 * lambda)]) }
    } else {
        Pwl { left: (0.0, 0.0), right: (0.0, 0.0), knots: VecDeque::new() }
    };
    let mut lo = vec![0.0; k];
    let mut hi = vec![0.0; k];
    for i in 0..k {
        // derivative of the value function at element i: C + (z − v_i)
        c.left = (c.left.0 + 1.0, c.left.1 - v[i]);
        c.right = (c.right.0 + 1.0, c.right.1 - v[i]);
        if i + 1 == k {
            break;
        }
        let (l, (al, bl)) = c.cross_from_left(-lambda);
        let (h, (ah, bh)) = c.cross_from_right(lambda);
        lo[i] = l;
        hi[i] = h.max(l);
        c.knots.push_front((l, al, bl + lambda));
        c.knots.push_back((hi[i], -ah, lambda - bh));
        c.left = (0.0, -lambda);
        c.right = (0.0, lambda);
    }
    let mut z = vec![0.0; k];
    z[k - 1] = c.cross_from_left(0.0).0;
    for i in (0..k - 1).rev() {
        z[i] = z[i + 1].clamp(lo[i], hi[i]);
    }
    z
}

pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}
