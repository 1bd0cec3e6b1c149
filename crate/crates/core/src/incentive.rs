//! Best-response incentive updates.
//!
//! Each EV's bid problem is separable, `min sum_j (y_ij - w_ij)^2` over a box,
//! so the answer is a clamp. The utility's problem at facility `s` is
//! `min (L_s - sum y)^2` with per-entry and total bounds. Its minimizers form
//! a face of the box; we return the equal split, which is the minimum-norm
//! point of that face.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CostMatrices, Interval, Matrix, NodeId, PvProfile, ScenarioConfig};

/// Bid update for one EV: `clamp(w_ij, r_min, r_max)` on feasible pairs and 0
/// elsewhere. `ride_assignment` is the EV's current row of ride assignments;
/// the quadratic cost does not depend on it.
pub fn ev_best_bids(w_row: &[f64], feasible: &[bool], ride_assignment: &[f64], bounds: Interval) -> Result<Vec<f64>> {
    if bounds.is_empty() {
        return Err(Error::Config(format!("ride incentive box [{}, {}] is empty", bounds.lo, bounds.hi)));
    }
    debug_assert_eq!(w_row.len(), feasible.len());
    debug_assert!(ride_assignment.is_empty() || ride_assignment.len() == w_row.len());
    Ok(w_row.iter().zip(feasible).map(|(&w, &ok)| if ok { bounds.clamp(w) } else { 0.0 }).collect())
}

/// Ride block of the incentives for every EV.
pub fn ride_incentives(costs: &CostMatrices, bounds: Interval) -> Result<Matrix> {
    let (m, p) = (costs.m(), costs.p());
    let mut out = Matrix::zeros(m, p);
    for i in 0..m {
        let feasible: Vec<bool> = (0..p).map(|j| costs.ride_feasible(i, j)).collect();
        let row = ev_best_bids(costs.w.row(i), &feasible, &[], bounds)?;
        out.row_mut(i).copy_from_slice(&row);
    }
    Ok(out)
}

/// `sum_j (y_j - w_j)^2` over the given entries.
pub fn ev_objective(y: &[f64], w: &[f64]) -> f64 {
    y.iter().zip(w).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// The utility's problem at one facility, given the current assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilitySubproblem {
    pub facility: NodeId,
    /// `(ev index, charge index)` pairs currently assigned at this facility.
    pub assigned_pairs: Vec<(usize, usize)>,
    pub loss_target: f64,
    pub entry_box: Interval,
    pub sum_box: Interval,
}

impl FacilitySubproblem {
    /// Range of totals the incentives can reach.
    pub fn target_interval(&self) -> Result<Interval> {
        let n = self.assigned_pairs.len() as f64;
        let reach = Interval::new(n * self.entry_box.lo, n * self.entry_box.hi);
        let range = reach.intersect(&self.sum_box);
        if self.entry_box.is_empty() || range.is_empty() {
            return Err(Error::InfeasibleIncentiveBounds { facility: self.facility, lo: range.lo, hi: range.hi });
        }
        Ok(range)
    }

    /// `(L_s - sum y)^2`.
    pub fn objective(&self, y: &[f64]) -> f64 {
        let r = self.loss_target - y.iter().sum::<f64>();
        r * r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityIncentive {
    pub facility: NodeId,
    pub assigned_pairs: Vec<(usize, usize)>,
    /// Incentive paid on each assigned pair.
    pub per_pair: f64,
    pub total: f64,
    pub residual_loss: f64,
    /// True when the total bound, not the per-entry box, decided the total.
    pub sum_box_active: bool,
}

/// Closed-form solution of every facility subproblem.
pub fn utility_incentives(subs: &[FacilitySubproblem]) -> Result<Vec<FacilityIncentive>> {
    subs.iter()
        .map(|sub| {
            let n = sub.assigned_pairs.len();
            if n == 0 {
                return Ok(FacilityIncentive {
                    facility: sub.facility,
                    assigned_pairs: Vec::new(),
                    per_pair: 0.0,
                    total: 0.0,
                    residual_loss: sub.loss_target * sub.loss_target,
                    sum_box_active: false,
                });
            }
            let range = sub.target_interval()?;
            let total = range.clamp(sub.loss_target);
            // Division can land one ulp outside the entry box.
            let per_pair = sub.entry_box.clamp(total / n as f64);
            let entry_only =
                Interval::new(n as f64 * sub.entry_box.lo, n as f64 * sub.entry_box.hi).clamp(sub.loss_target);
            Ok(FacilityIncentive {
                facility: sub.facility,
                assigned_pairs: sub.assigned_pairs.clone(),
                per_pair,
                total,
                residual_loss: (sub.loss_target - total).powi(2),
                sum_box_active: (entry_only - total).abs() > 1e-12 * (1.0 + total.abs()),
            })
        })
        .collect()
}

/// `c_RER (P_ref - v_ch p_ch)`; negative when charging draws more than the PV
/// output.
pub fn loss_target(c_rer: f64, p_ref_kw: f64, charging_count: usize, p_ch: f64) -> f64 {
    c_rer * (p_ref_kw - charging_count as f64 * p_ch)
}

/// Loss target of a facility at a given minute.
pub fn compute_loss_target(
    facility: NodeId,
    minute: u32,
    pv: &PvProfile,
    charging_count: usize,
    cfg: &ScenarioConfig,
) -> f64 {
    loss_target(cfg.c_rer_at(minute), pv.power(facility, minute), charging_count, cfg.p_ch)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sub(n: usize, target: f64, entry: (f64, f64), sum: (f64, f64)) -> FacilitySubproblem {
        FacilitySubproblem {
            facility: 3,
            assigned_pairs: (0..n).map(|i| (i, i)).collect(),
            loss_target: target,
            entry_box: Interval::new(entry.0, entry.1),
            sum_box: Interval::new(sum.0, sum.1),
        }
    }

    #[test]
    fn best_bid_is_a_clamp() {
        let b = Interval::new(0.0, 10.0);
        assert_eq!(ev_best_bids(&[5.0], &[true], &[], b).unwrap(), vec![5.0]);
        assert_eq!(ev_best_bids(&[-3.0], &[true], &[], b).unwrap(), vec![0.0]);
        assert_eq!(ev_best_bids(&[12.0, 4.0], &[true, false], &[], b).unwrap(), vec![10.0, 0.0]);
        assert!(matches!(ev_best_bids(&[1.0], &[true], &[], Interval::new(1.0, 0.0)), Err(Error::Config(_))));
    }

    #[test]
    fn single_pair_hits_target() {
        let out = utility_incentives(&[sub(1, 7.0, (0.0, 10.0), (0.0, 100.0))]).unwrap();
        assert_eq!(out[0].per_pair, 7.0);
        assert_eq!(out[0].residual_loss, 0.0);
    }

    #[test]
    fn entry_box_caps_the_split() {
        let out = utility_incentives(&[sub(2, 30.0, (0.0, 10.0), (0.0, 100.0))]).unwrap();
        assert_eq!(out[0].per_pair, 10.0);
        assert_eq!(out[0].total, 20.0);
        assert_eq!(out[0].residual_loss, 100.0);
        assert!(!out[0].sum_box_active);
    }

    #[test]
    fn interior_target_splits_evenly() {
        let out = utility_incentives(&[sub(2, 8.0, (0.0, 10.0), (0.0, 100.0))]).unwrap();
        assert_eq!(out[0].per_pair, 4.0);
        assert_eq!(out[0].residual_loss, 0.0);
    }

    #[test]
    fn sum_box_binds() {
        let out = utility_incentives(&[sub(3, 20.0, (0.0, 10.0), (0.0, 6.0))]).unwrap();
        assert_eq!(out[0].total, 6.0);
        assert_eq!(out[0].per_pair, 2.0);
        assert!(out[0].sum_box_active);
    }

    #[test]
    fn negative_target_clamps_to_lower_bound() {
        // P_ref = 24 kW with three EVs at 12 kW and c_RER = 1.
        let l = loss_target(1.0, 24.0, 3, 12.0);
        assert_eq!(l, -12.0);
        let out = utility_incentives(&[sub(2, l, (0.5, 10.0), (0.0, 100.0))]).unwrap();
        assert_eq!(out[0].total, 1.0);
        assert_eq!(out[0].per_pair, 0.5);
    }

    #[test]
    fn loss_target_examples() {
        assert_eq!(loss_target(0.1, 60.0, 5, 12.0), 0.0);
        assert_eq!(loss_target(1.0, 50.0, 0, 12.0), 50.0);
    }

    #[test]
    fn empty_facility_is_neutral() {
        let out = utility_incentives(&[sub(0, 5.0, (1.0, 2.0), (10.0, 20.0))]).unwrap();
        assert_eq!(out[0].total, 0.0);
        assert!(out[0].assigned_pairs.is_empty());
    }

    #[test]
    fn empty_feasible_interval_names_facility() {
        let err = utility_incentives(&[sub(2, 5.0, (0.0, 1.0), (3.0, 4.0))]).unwrap_err();
        assert!(matches!(err, Error::InfeasibleIncentiveBounds { facility: 3, .. }));
    }
}
