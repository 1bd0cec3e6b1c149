//! Equilibrium certificates for bargaining outcomes.
//!
//! A point `z = (X, Y)` stacks the padded `h x h` assignment and incentive
//! matrices. `F(z)` stacks each player's gradient with respect to its own
//! variables. The regularized gap
//! `u(z) = -<F(z), h(z) - z> + 0.5 |h(z) - z|^2` with `h(z) = P(z - F(z))`
//! is non-negative on the feasible set and vanishes exactly at solutions of
//! the associated quasi-variational inequality: the projection inequality
//! gives `-<F, h - z> >= |h - z|^2`.
//!
//! The feasible set for `Y` depends on `X` (charge incentives are only free
//! on assigned pairs), so projections take the `X` that defines it.

use serde::{Deserialize, Serialize};

use crate::assign::{lap, pad_symmetric};
use crate::bargain::EpochProblem;
use crate::error::{Error, Result};
use crate::model::{AssignmentMatrix, IncentiveMatrix, Interval, Matrix};

pub const DYKSTRA_TOLERANCE: f64 = 1e-8;
pub const DYKSTRA_MAX_SWEEPS: usize = 10_000;
const MERIT_CLIP: f64 = 1e-12;

/// `z = (X, Y)` over the padded index sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamePoint {
    pub x: Matrix,
    pub y: Matrix,
}

impl GamePoint {
    pub fn zeros(h: usize) -> Self {
        GamePoint { x: Matrix::zeros(h, h), y: Matrix::zeros(h, h) }
    }

    pub fn from_solution(x: &AssignmentMatrix, y: &IncentiveMatrix) -> Self {
        let h = x.h();
        GamePoint { x: x.to_dense(), y: Matrix::from_fn(h, h, |i, j| y.padded(i, j)) }
    }

    pub fn h(&self) -> usize {
        self.x.rows()
    }

    pub fn dim(&self) -> usize {
        2 * self.h() * self.h()
    }

    /// `vec(X)` then `vec(Y)`, both row-major.
    pub fn to_vec(&self) -> Vec<f64> {
        self.x.as_slice().iter().chain(self.y.as_slice()).copied().collect()
    }

    pub fn from_vec(h: usize, v: &[f64]) -> Result<Self> {
        if v.len() != 2 * h * h {
            return Err(Error::Invariant(format!("game point of length {} for h = {h}", v.len())));
        }
        let (x, y) = v.split_at(h * h);
        Ok(GamePoint { x: Matrix::from_vec(h, h, x.to_vec())?, y: Matrix::from_vec(h, h, y.to_vec())? })
    }

    fn axpy(&self, a: f64, other: &GamePoint) -> GamePoint {
        let comb = |s: &Matrix, o: &Matrix| {
            Matrix::from_vec(s.rows(), s.cols(), s.iter().zip(o.iter()).map(|(p, q)| p + a * q).collect())
                .expect("same shape")
        };
        GamePoint { x: comb(&self.x, &other.x), y: comb(&self.y, &other.y) }
    }

    fn dot(&self, other: &GamePoint) -> f64 {
        let d = |a: &Matrix, b: &Matrix| a.iter().zip(b.iter()).map(|(p, q)| p * q).sum::<f64>();
        d(&self.x, &other.x) + d(&self.y, &other.y)
    }
}

fn check_dims(problem: &EpochProblem, z: &GamePoint) -> Result<()> {
    if z.h() != problem.h() || z.y.rows() != problem.h() || !z.x.is_square() || !z.y.is_square() {
        return Err(Error::Invariant(format!("game point has h = {}, problem needs h = {}", z.h(), problem.h())));
    }
    Ok(())
}

/// Padded assignment costs without incentives.
pub fn base_cost(problem: &EpochProblem) -> Matrix {
    let (m, p, q) = (problem.m(), problem.p(), problem.q());
    pad_symmetric(&problem.costs, &IncentiveMatrix::zeros(m, p, q)).net_cost
}

fn rho(problem: &EpochProblem, z: &GamePoint) -> Vec<f64> {
    let (m, p) = (problem.m(), problem.p());
    let mut rho = vec![0.0; problem.facilities.len()];
    for i in 0..m {
        for (k, &s) in problem.charge_facility.iter().enumerate() {
            rho[s] += z.x[(i, p + k)] * z.y[(i, p + k)];
        }
    }
    rho
}

/// Provider objective `sum (K - Y) X` over the padded matrices.
pub fn rsp_value(problem: &EpochProblem, z: &GamePoint) -> f64 {
    let k = base_cost(problem);
    (0..z.h()).flat_map(|i| (0..z.h()).map(move |j| (i, j))).map(|(i, j)| (k[(i, j)] - z.y[(i, j)]) * z.x[(i, j)]).sum()
}

/// Sum of the EV objectives `(y_ij - w_ij)^2` over every real ride entry.
pub fn ev_value(problem: &EpochProblem, z: &GamePoint) -> f64 {
    let mut total = 0.0;
    for i in 0..problem.m() {
        for j in 0..problem.p() {
            total += (z.y[(i, j)] - problem.costs.w[(i, j)]).powi(2);
        }
    }
    total
}

/// Utility objective `sum_s (L_s - rho_s)^2`, `rho_s = sum x_ij y_ij`.
pub fn puc_value(problem: &EpochProblem, z: &GamePoint) -> f64 {
    problem.facilities.iter().zip(rho(problem, z)).map(|(f, r)| (f.loss_target - r).powi(2)).sum()
}

/// `F(z)`: each player's gradient in its own variables.
pub fn game_gradient(problem: &EpochProblem, z: &GamePoint) -> Result<GamePoint> {
    check_dims(problem, z)?;
    let (m, p, h) = (problem.m(), problem.p(), problem.h());
    let k = base_cost(problem);
    let rho = rho(problem, z);
    let fx = Matrix::from_fn(h, h, |i, j| k[(i, j)] - z.y[(i, j)]);
    let fy = Matrix::from_fn(h, h, |i, j| {
        if i >= m {
            0.0
        } else if j < p {
            2.0 * (z.y[(i, j)] - problem.costs.w[(i, j)])
        } else if let Some(&s) = problem.charge_facility.get(j - p) {
            -2.0 * z.x[(i, j)] * (problem.facilities[s].loss_target - rho[s])
        } else {
            0.0
        }
    });
    Ok(GamePoint { x: fx, y: fy })
}

/// Euclidean projection onto the doubly stochastic matrices by Dykstra's
/// method over two sets: unit-box matrices with unit row sums, and unit-box
/// matrices with unit column sums. Each set projects row by row (column by
/// column) with [`project_box_sum`], so entries far below the rest are
/// clamped to zero in one step whatever their magnitude.
pub fn project_birkhoff(v: &Matrix) -> Result<Matrix> {
    project_birkhoff_with(v, DYKSTRA_TOLERANCE, DYKSTRA_MAX_SWEEPS)
}

pub fn project_birkhoff_with(v: &Matrix, tol: f64, max_sweeps: usize) -> Result<Matrix> {
    assert!(v.is_square(), "doubly stochastic projection needs a square matrix");
    let h = v.rows();
    if h == 0 {
        return Ok(v.clone());
    }
    let unit = vec![1.0; h];
    let boxes = vec![Interval::new(0.0, 1.0); h];
    let capped_simplex = |line: &[f64]| {
        project_box_sum(line, &unit, &boxes, Interval::point(1.0)).expect("unit capped simplex is non-empty")
    };
    let mut x = v.clone();
    let mut p = Matrix::zeros(h, h);
    let mut q = Matrix::zeros(h, h);
    let mut residual = f64::INFINITY;
    for _ in 0..max_sweeps {
        let (prev_x, prev_p, prev_q) = (x.clone(), p.clone(), q.clone());

        let y = Matrix::from_fn(h, h, |i, j| x[(i, j)] + p[(i, j)]);
        let mut rows = Matrix::zeros(h, h);
        for i in 0..h {
            rows.row_mut(i).copy_from_slice(&capped_simplex(y.row(i)));
        }
        p = Matrix::from_fn(h, h, |i, j| y[(i, j)] - rows[(i, j)]);

        let y = Matrix::from_fn(h, h, |i, j| rows[(i, j)] + q[(i, j)]);
        for j in 0..h {
            let col: Vec<f64> = (0..h).map(|i| y[(i, j)]).collect();
            for (i, val) in capped_simplex(&col).into_iter().enumerate() {
                x[(i, j)] = val;
            }
        }
        q = Matrix::from_fn(h, h, |i, j| y[(i, j)] - x[(i, j)]);

        residual = stochastic_residual(&x);
        // The iterate can sit still for many sweeps while the corrections
        // drift, so only a fixed point of all three counts.
        let moved = x.max_abs_diff(&prev_x).max(p.max_abs_diff(&prev_p)).max(q.max_abs_diff(&prev_q));
        if residual <= tol && moved <= tol {
            return Ok(x);
        }
    }
    Err(Error::ProjectionBudgetExceeded { sweeps: max_sweeps, residual })
}

/// Largest deviation of a row or column sum from 1.
pub fn stochastic_residual(x: &Matrix) -> f64 {
    let h = x.rows();
    let rows = (0..h).map(|i| (x.row(i).iter().sum::<f64>() - 1.0).abs());
    let cols = (0..h).map(|j| ((0..h).map(|i| x[(i, j)]).sum::<f64>() - 1.0).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Projection onto `{y : y_j in boxes_j, sum_j weights_j y_j in sum}`.
///
/// The minimizer is `y_j = clamp(v_j - lambda weights_j)` for a scalar
/// `lambda` found by bisection over the breakpoints of the piecewise-linear,
/// non-increasing map `lambda -> sum_j weights_j y_j`, then solved exactly on
/// the bracketing segment. Weights must be positive.
pub fn project_box_sum(v: &[f64], weights: &[f64], boxes: &[Interval], sum: Interval) -> Option<Vec<f64>> {
    assert!(v.len() == weights.len() && v.len() == boxes.len());
    let reach = weights
        .iter()
        .zip(boxes)
        .fold(Interval::point(0.0), |acc, (&w, b)| Interval::new(acc.lo + w * b.lo, acc.hi + w * b.hi));
    if boxes.iter().any(Interval::is_empty) || reach.intersect(&sum).is_empty() {
        return None;
    }
    let at = |lambda: f64| -> Vec<f64> {
        v.iter().zip(weights).zip(boxes).map(|((&vj, &wj), b)| b.clamp(vj - lambda * wj)).collect()
    };
    let g = |y: &[f64]| -> f64 { y.iter().zip(weights).map(|(a, w)| a * w).sum() };

    let y0 = at(0.0);
    let g0 = g(&y0);
    let target = if g0 > sum.hi {
        sum.hi
    } else if g0 < sum.lo {
        sum.lo
    } else {
        return Some(y0);
    };

    let mut breaks: Vec<f64> =
        v.iter().zip(weights).zip(boxes).flat_map(|((&vj, &wj), b)| [(vj - b.hi) / wj, (vj - b.lo) / wj]).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    // g is non-increasing in lambda, from reach.hi to reach.lo.
    let (mut lo, mut hi) = (0usize, breaks.len() - 1);
    if g(&at(breaks[lo])) <= target {
        return Some(at(breaks[lo]));
    }
    if g(&at(breaks[hi])) >= target {
        return Some(at(breaks[hi]));
    }
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if g(&at(breaks[mid])) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Linear on [breaks[lo], breaks[hi]]: entries strictly inside their box
    // move with slope -w_j^2.
    let (l0, l1) = (breaks[lo], breaks[hi]);
    let mid = 0.5 * (l0 + l1);
    let mut fixed = 0.0;
    let mut free_v = 0.0;
    let mut free_w2 = 0.0;
    for ((&vj, &wj), b) in v.iter().zip(weights).zip(boxes) {
        let t = vj - mid * wj;
        if t <= b.lo {
            fixed += wj * b.lo;
        } else if t >= b.hi {
            fixed += wj * b.hi;
        } else {
            free_v += wj * vj;
            free_w2 += wj * wj;
        }
    }
    let lambda = if free_w2 > 0.0 { ((fixed + free_v - target) / free_w2).clamp(l0, l1) } else { mid };
    Some(at(lambda))
}

/// Projection of `v` onto the feasible set defined by assignment `x_set`.
///
/// Charge incentives are free only on feasible pairs with `x >= 1/2`, subject
/// to the per-pair box and, per facility, `sum x y` within the sum box.
/// Infeasible and virtual entries are fixed at zero.
pub fn project_joint(problem: &EpochProblem, v: &GamePoint, x_set: &Matrix) -> Result<GamePoint> {
    check_dims(problem, v)?;
    let (m, p, h) = (problem.m(), problem.p(), problem.h());
    let x = project_birkhoff(&v.x)?;
    let mut y = Matrix::zeros(h, h);
    for i in 0..m {
        for j in 0..p {
            if problem.costs.ride_feasible(i, j) {
                y[(i, j)] = problem.ride_box.clamp(v.y[(i, j)]);
            }
        }
    }
    for (s, f) in problem.facilities.iter().enumerate() {
        let free: Vec<(usize, usize)> = (0..m)
            .flat_map(|i| (0..problem.q()).map(move |k| (i, k)))
            .filter(|&(i, k)| {
                problem.charge_facility[k] == s && problem.costs.charge_feasible(i, k) && x_set[(i, p + k)] >= 0.5
            })
            .collect();
        if free.is_empty() {
            continue;
        }
        let vals: Vec<f64> = free.iter().map(|&(i, k)| v.y[(i, p + k)]).collect();
        let weights: Vec<f64> = free.iter().map(|&(i, k)| x_set[(i, p + k)]).collect();
        let boxes = vec![problem.charge_box; free.len()];
        let out = project_box_sum(&vals, &weights, &boxes, f.sum_box).ok_or(Error::InfeasibleIncentiveBounds {
            facility: f.facility,
            lo: f.sum_box.lo.max(free.len() as f64 * problem.charge_box.lo),
            hi: f.sum_box.hi.min(free.len() as f64 * problem.charge_box.hi),
        })?;
        for (&(i, k), val) in free.iter().zip(out) {
            y[(i, p + k)] = val;
        }
    }
    Ok(GamePoint { x, y })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeritReport {
    /// `u(z)`, clipped at zero.
    pub merit: f64,
    /// Value before clipping.
    pub raw: f64,
    /// `|h(z) - z|`.
    pub step_norm: f64,
    /// Distance moved when `z` had to be projected onto the feasible set.
    pub infeasibility: f64,
}

/// `u(z)`; a point outside the feasible set is projected first.
pub fn merit(problem: &EpochProblem, z: &GamePoint) -> Result<f64> {
    merit_report(problem, z).map(|r| r.merit)
}

pub fn merit_report(problem: &EpochProblem, z: &GamePoint) -> Result<MeritReport> {
    check_dims(problem, z)?;
    let h = problem.h();
    if h == 0 {
        return Ok(MeritReport { merit: 0.0, raw: 0.0, step_norm: 0.0, infeasibility: 0.0 });
    }
    let projected = project_joint(problem, z, &z.x)?;
    let infeasibility = projected.axpy(-1.0, z).dot(&projected.axpy(-1.0, z)).sqrt();
    let z = if infeasibility > 1e-9 { projected } else { z.clone() };

    let mut f = game_gradient(problem, &z)?;
    // Row and column shifts of the X-gradient are orthogonal to the affine
    // hull of the doubly stochastic matrices, so they change neither the
    // projection nor <F, h - z>. Subtracting the assignment duals keeps the
    // sentinel's magnitude out of the arithmetic.
    let (u, v) = lap::dual_potentials(&f.x);
    for i in 0..h {
        for j in 0..h {
            f.x[(i, j)] -= u[i] + v[j];
        }
    }
    let hz = project_joint(problem, &z.axpy(-1.0, &f), &z.x)?;
    let d = hz.axpy(-1.0, &z);
    let raw = -f.dot(&d) + 0.5 * d.dot(&d);
    let merit = if raw < MERIT_CLIP { raw.max(0.0) } else { raw };
    Ok(MeritReport { merit, raw, step_norm: d.dot(&d).sqrt(), infeasibility })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub merit: f64,
    pub epsilon: f64,
    pub pass: bool,
    /// Some facility's sum bound binds, so the game is generalized and the
    /// certificate is informative rather than guaranteed.
    pub coupling_active: bool,
}

/// Merit of a bargaining outcome against `epsilon`.
pub fn certify(problem: &EpochProblem, x: &AssignmentMatrix, y: &IncentiveMatrix, epsilon: f64) -> Result<Certificate> {
    let z = GamePoint::from_solution(x, y);
    let merit = merit(problem, &z)?;
    let coupling_active =
        crate::incentive::utility_incentives(&problem.facility_subproblems(x))?.iter().any(|f| f.sum_box_active);
    Ok(Certificate { merit, epsilon, pass: merit <= epsilon, coupling_active })
}
