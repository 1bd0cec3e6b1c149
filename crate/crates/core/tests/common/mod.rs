//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use greenride::model::{Interval, Matrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Minimum of `sum_i cost[i][perm[i]]` over every permutation.
pub fn brute_force_lap(cost: &Matrix) -> f64 {
    let h = cost.rows();
    (0..h)
        .permutations(h)
        .map(|perm| perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Square cost matrix with a few sentinel entries, like a padded epoch.
pub fn random_padded_costs(rng: &mut impl Rng, h: usize) -> Matrix {
    Matrix::from_fn(h, h, |_, _| if rng.gen_bool(0.15) { 1e6 } else { (rng.gen_range(-40i32..=100) as f64) / 10.0 })
}

/// Projection onto `{y in box, sum y in sum}` by bisection on the shift.
pub fn project_capped(v: &[f64], bx: Interval, sum: Interval) -> Vec<f64> {
    let shifted = |lam: f64| v.iter().map(|&x| bx.clamp(x - lam)).collect::<Vec<_>>();
    let total = |lam: f64| shifted(lam).iter().sum::<f64>();
    let s0 = total(0.0);
    let target = if s0 > sum.hi {
        sum.hi
    } else if s0 < sum.lo {
        sum.lo
    } else {
        return shifted(0.0);
    };
    let spread = v.iter().fold(0.0f64, |a, x| a.max(x.abs())) + bx.lo.abs().max(bx.hi.abs()) + 1.0;
    let (mut lo, mut hi) = (-spread, spread);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shifted(0.5 * (lo + hi))
}

/// Projected gradient descent with a fixed step.
pub fn projected_gradient(
    start: Vec<f64>,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    project: impl Fn(&[f64]) -> Vec<f64>,
    step: f64,
    iters: usize,
) -> Vec<f64> {
    let mut y = project(&start);
    for _ in 0..iters {
        let g = grad(&y);
        let next: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - step * b).collect();
        let next = project(&next);
        let moved = next.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        y = next;
        if moved < 1e-15 {
            break;
        }
    }
    y
}

/// Central difference of `f` along coordinate `k`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, at: &[f64], k: usize, step: f64) -> f64 {
    let mut plus = at.to_vec();
    let mut minus = at.to_vec();
    plus[k] += step;
    minus[k] -= step;
    (f(&plus) - f(&minus)) / (2.0 * step)
}

/// Pass/fail line in the acceptance format.
pub fn report(id: u32, pass: bool, detail: impl std::fmt::Display) -> bool {
    println!("criterion {id}: {} {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}
