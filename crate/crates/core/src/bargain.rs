//! Gauss-Seidel best-response bargaining for one assignment epoch.
//!
//! Starting from the plain assignment (no incentives), each sweep lets the
//! utility price its charge requests against the current assignment, lets
//! every EV bid on the rides it can reach, and re-solves the assignment under
//! the new incentives. The loop stops at a fixed point or after
//! `max_bargain_iters` sweeps.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assign::{self, Dispatch, LapSolution};
use crate::error::{Error, Result};
use crate::incentive::{self, FacilityIncentive, FacilitySubproblem};
use crate::model::{
    Activity, AssignmentMatrix, ChargeRequest, CityGraph, CostMatrices, Ev, IncentiveMatrix, Interval, Matrix, NodeId,
    PvProfile, RideRequest, ScenarioConfig,
};

/// Utility-side data for one facility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacilityTerms {
    pub facility: NodeId,
    pub loss_target: f64,
    pub sum_box: Interval,
}

/// Everything the three players need at one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochProblem {
    pub minute: u32,
    /// EV id per cost-matrix row.
    pub ev_ids: Vec<usize>,
    /// Ride id per ride column.
    pub ride_ids: Vec<usize>,
    /// Charge request id per charge column.
    pub charge_ids: Vec<usize>,
    pub costs: CostMatrices,
    /// Index into `facilities` for every charge column.
    pub charge_facility: Vec<usize>,
    pub facilities: Vec<FacilityTerms>,
    pub ride_box: Interval,
    pub charge_box: Interval,
}

impl EpochProblem {
    /// Costs and utility terms for the given EVs and open requests.
    ///
    /// Loss targets count the EVs of `evs` currently charging at each
    /// facility.
    pub fn build(
        minute: u32,
        evs: &[Ev],
        rides: &[RideRequest],
        charges: &[ChargeRequest],
        graph: &CityGraph,
        cfg: &ScenarioConfig,
        pv: &PvProfile,
    ) -> Result<Self> {
        let costs = assign::build_cost_matrices(evs, rides, charges, graph, cfg)?;
        let facilities: Vec<FacilityTerms> = graph
            .facilities()
            .iter()
            .map(|&s| {
                let charging = evs.iter().filter(|ev| ev.activity == Activity::Charging && ev.location == s).count();
                FacilityTerms {
                    facility: s,
                    loss_target: incentive::compute_loss_target(s, minute, pv, charging, cfg),
                    sum_box: cfg.sum_box(pv.peak(s)),
                }
            })
            .collect();
        let charge_facility = charges
            .iter()
            .map(|c| {
                facilities
                    .iter()
                    .position(|f| f.facility == c.facility)
                    .ok_or_else(|| Error::Config(format!("charge request at non-facility node {}", c.facility)))
            })
            .collect::<Result<_>>()?;
        Ok(EpochProblem {
            minute,
            ev_ids: evs.iter().map(|ev| ev.id).collect(),
            ride_ids: rides.iter().map(|r| r.id).collect(),
            charge_ids: charges.iter().map(|c| c.id).collect(),
            costs,
            charge_facility,
            facilities,
            ride_box: cfg.ride_box(),
            charge_box: cfg.charge_box(),
        })
    }

    pub fn m(&self) -> usize {
        self.costs.m()
    }

    pub fn p(&self) -> usize {
        self.costs.p()
    }

    pub fn q(&self) -> usize {
        self.costs.q()
    }

    pub fn h(&self) -> usize {
        self.m().max(self.p() + self.q())
    }

    /// Drops EVs and requests without a single feasible pair.
    ///
    /// Every padded optimum first maximizes the number of feasible matches
    /// and then minimizes their net cost, so removing agents that can only
    /// ever be matched at the sentinel does not change which feasible pairs
    /// an optimum dispatches.
    pub fn compact(&self) -> EpochProblem {
        let c = &self.costs;
        let (m, p, q) = (c.m(), c.p(), c.q());
        let rows: Vec<usize> = (0..m)
            .filter(|&i| (0..p).any(|j| c.ride_feasible(i, j)) || (0..q).any(|k| c.charge_feasible(i, k)))
            .collect();
        let rides: Vec<usize> = (0..p).filter(|&j| rows.iter().any(|&i| c.ride_feasible(i, j))).collect();
        let charges: Vec<usize> = (0..q).filter(|&k| rows.iter().any(|&i| c.charge_feasible(i, k))).collect();
        let pick =
            |mat: &Matrix, cols: &[usize]| Matrix::from_fn(rows.len(), cols.len(), |a, b| mat[(rows[a], cols[b])]);
        EpochProblem {
            minute: self.minute,
            ev_ids: rows.iter().map(|&i| self.ev_ids[i]).collect(),
            ride_ids: rides.iter().map(|&j| self.ride_ids[j]).collect(),
            charge_ids: charges.iter().map(|&k| self.charge_ids[k]).collect(),
            costs: CostMatrices {
                c: pick(&c.c, &rides),
                d: pick(&c.d, &charges),
                a: pick(&c.a, &rides),
                w: pick(&c.w, &rides),
            },
            charge_facility: charges.iter().map(|&k| self.charge_facility[k]).collect(),
            facilities: self.facilities.clone(),
            ride_box: self.ride_box,
            charge_box: self.charge_box,
        }
    }

    /// The ride-service provider's response to incentives `y`.
    pub fn rsp(&self, y: &IncentiveMatrix) -> LapSolution {
        assign::solve_lap(&assign::pad_symmetric(&self.costs, y))
    }

    /// Per-facility subproblems for assignment `x`. Only feasible matches
    /// count; a forced sentinel match is not a real charging commitment.
    pub fn facility_subproblems(&self, x: &AssignmentMatrix) -> Vec<FacilitySubproblem> {
        let mut pairs: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.facilities.len()];
        for k in 0..self.q() {
            if let Some(i) = x.ev_for_charge(k) {
                if self.costs.charge_feasible(i, k) {
                    pairs[self.charge_facility[k]].push((i, k));
                }
            }
        }
        self.facilities
            .iter()
            .zip(pairs)
            .map(|(f, assigned_pairs)| FacilitySubproblem {
                facility: f.facility,
                assigned_pairs,
                loss_target: f.loss_target,
                entry_box: self.charge_box,
                sum_box: f.sum_box,
            })
            .collect()
    }

    /// The utility's response: charge block of the incentives.
    pub fn puc(&self, x: &AssignmentMatrix) -> Result<(Matrix, Vec<FacilityIncentive>)> {
        let solved = incentive::utility_incentives(&self.facility_subproblems(x))?;
        let mut block = Matrix::zeros(self.m(), self.q());
        for f in &solved {
            for &(i, k) in &f.assigned_pairs {
                block[(i, k)] = f.per_pair;
            }
        }
        Ok((block, solved))
    }

    /// The EVs' responses: ride block of the incentives.
    pub fn ev_bids(&self) -> Result<Matrix> {
        incentive::ride_incentives(&self.costs, self.ride_box)
    }

    /// `sum_s (L_s - rho_s)^2` with `rho_s` over feasible matches at `s`.
    pub fn puc_objective(&self, x: &AssignmentMatrix, y: &IncentiveMatrix) -> f64 {
        let mut rho = vec![0.0; self.facilities.len()];
        for k in 0..self.q() {
            if let Some(i) = x.ev_for_charge(k) {
                if self.costs.charge_feasible(i, k) {
                    rho[self.charge_facility[k]] += y.charge(i, k);
                }
            }
        }
        self.facilities.iter().zip(rho).map(|(f, r)| (f.loss_target - r).powi(2)).sum()
    }

    /// `sum_i sum_j (y_ij - w_ij)^2` over feasible ride pairs.
    pub fn ev_objective(&self, y: &IncentiveMatrix) -> f64 {
        let mut total = 0.0;
        for i in 0..self.m() {
            for j in 0..self.p() {
                if self.costs.ride_feasible(i, j) {
                    total += (y.ride(i, j) - self.costs.w[(i, j)]).powi(2);
                }
            }
        }
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    FixedPoint,
    MaxIters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainIterate {
    pub k: usize,
    pub assignment: AssignmentMatrix,
    pub incentives: IncentiveMatrix,
    pub rsp_objective: f64,
    pub puc_objective: f64,
    pub ev_objective: f64,
}

/// Every iterate from the initial assignment (`k = 0`) on.
#[derive(Debug, Clone, PartialEq)]
pub struct BargainTrace {
    pub iterations: Vec<BargainIterate>,
    pub converged: bool,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BargainOutcome {
    pub assignment: AssignmentMatrix,
    pub incentives: IncentiveMatrix,
    pub rsp_objective: f64,
    pub trace: BargainTrace,
    /// Index into `trace.iterations` of the returned iterate.
    pub chosen: usize,
    /// Utility solution at the returned assignment.
    pub facility_incentives: Vec<FacilityIncentive>,
}

impl BargainOutcome {
    pub fn converged(&self) -> bool {
        self.trace.converged
    }

    /// Number of sweeps run.
    pub fn sweeps(&self) -> usize {
        self.trace.iterations.len() - 1
    }

    /// True when some facility's total incentive was cut by its sum bound.
    pub fn coupling_active(&self) -> bool {
        self.facility_incentives.iter().any(|f| f.sum_box_active)
    }
}

/// Bargaining loop on a prepared problem.
///
/// Without a fixed point the iterate with the smallest assignment objective
/// among sweeps `1..` is returned, earliest on ties.
pub fn solve(problem: &EpochProblem, max_iters: usize, tolerance: f64) -> Result<BargainOutcome> {
    let (m, p, q) = (problem.m(), problem.p(), problem.q());
    let y0 = IncentiveMatrix::zeros(m, p, q);
    let first = problem.rsp(&y0);
    let mut iterations = vec![BargainIterate {
        k: 0,
        puc_objective: problem.puc_objective(&first.assignment, &y0),
        ev_objective: problem.ev_objective(&y0),
        assignment: first.assignment,
        incentives: y0,
        rsp_objective: first.objective,
    }];
    if m == 0 || p + q == 0 {
        let (_, facility_incentives) = problem.puc(&iterations[0].assignment)?;
        let it = &iterations[0];
        return Ok(BargainOutcome {
            assignment: it.assignment.clone(),
            incentives: it.incentives.clone(),
            rsp_objective: it.rsp_objective,
            trace: BargainTrace { iterations, converged: true, stop_reason: StopReason::FixedPoint },
            chosen: 0,
            facility_incentives,
        });
    }

    // Bids do not depend on the assignment.
    let ride_block = problem.ev_bids()?;
    let mut converged = false;
    for k in 1..=max_iters {
        let prev = iterations.last().expect("trace starts with k = 0");
        let (charge_block, _) = problem.puc(&prev.assignment)?;
        let y = IncentiveMatrix::from_blocks(&ride_block, &charge_block);
        let sol = problem.rsp(&y);
        let fixed = sol.assignment == prev.assignment && y.max_abs_diff(&prev.incentives) <= tolerance;
        iterations.push(BargainIterate {
            k,
            puc_objective: problem.puc_objective(&sol.assignment, &y),
            ev_objective: problem.ev_objective(&y),
            assignment: sol.assignment,
            incentives: y,
            rsp_objective: sol.objective,
        });
        if fixed {
            converged = true;
            break;
        }
    }

    let chosen = if converged {
        iterations.len() - 1
    } else {
        let mut best = 1;
        for (idx, it) in iterations.iter().enumerate().skip(2) {
            if it.rsp_objective < iterations[best].rsp_objective {
                best = idx;
            }
        }
        best
    };
    let it = &iterations[chosen];
    let (_, facility_incentives) = problem.puc(&it.assignment)?;
    Ok(BargainOutcome {
        assignment: it.assignment.clone(),
        incentives: it.incentives.clone(),
        rsp_objective: it.rsp_objective,
        chosen,
        facility_incentives,
        trace: BargainTrace {
            iterations,
            converged,
            stop_reason: if converged { StopReason::FixedPoint } else { StopReason::MaxIters },
        },
    })
}

/// Bargaining for one epoch followed by dispatch.
///
/// The problem is compacted before solving; the outcome's indices refer to
/// the returned (compacted) problem.
pub fn run_bargain(
    evs: &[Ev],
    rides: &[RideRequest],
    charges: &[ChargeRequest],
    graph: &CityGraph,
    cfg: &ScenarioConfig,
    pv: &PvProfile,
    minute: u32,
) -> Result<(EpochProblem, BargainOutcome, Vec<Dispatch>)> {
    let problem = EpochProblem::build(minute, evs, rides, charges, graph, cfg, pv)?.compact();
    let outcome = solve(&problem, cfg.max_bargain_iters, cfg.bargain_tolerance)?;
    let dispatch = problem.dispatch(&outcome.assignment);
    Ok((problem, outcome, dispatch))
}

impl EpochProblem {
    pub fn dispatch(&self, x: &AssignmentMatrix) -> Vec<Dispatch> {
        assign::assignment_to_dispatch(x, &self.costs, &self.ev_ids, &self.ride_ids, &self.charge_ids)
    }

    /// Incentive paid on each dispatched pair, keyed like the dispatch.
    pub fn dispatched_incentives(&self, x: &AssignmentMatrix, y: &IncentiveMatrix) -> (f64, f64) {
        let (p, q) = (self.p(), self.q());
        let mut ride = 0.0;
        let mut charge = 0.0;
        for i in 0..self.m() {
            let j = x.col_of(i);
            if j < p && self.costs.ride_feasible(i, j) {
                ride += y.ride(i, j);
            } else if j >= p && j < p + q && self.costs.charge_feasible(i, j - p) {
                charge += y.charge(i, j - p);
            }
        }
        (ride, charge)
    }

    /// Feasible charge matches per facility node.
    pub fn charge_matches(&self, x: &AssignmentMatrix) -> BTreeMap<NodeId, usize> {
        let mut out = BTreeMap::new();
        for sub in self.facility_subproblems(x) {
            if !sub.assigned_pairs.is_empty() {
                out.insert(sub.facility, sub.assigned_pairs.len());
            }
        }
        out
    }
}
