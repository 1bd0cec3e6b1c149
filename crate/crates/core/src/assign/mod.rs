//! The ride-service provider's assignment problem.
//!
//! Costs for every EV-request pair are built from hop distances, infeasible
//! pairs get [`INFEASIBLE_COST`], and the rectangular problem is padded with
//! virtual EVs or virtual requests to a square one that a Hungarian solver
//! handles exactly.

pub mod lap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Activity, AssignmentMatrix, ChargeRequest, CityGraph, CostMatrices, Ev, IncentiveMatrix, Matrix, RequestRef,
    RideRequest, Scenario, ScenarioConfig, FEASIBLE_COST_CEILING, INFEASIBLE_COST,
};
use crate::sim::pooling_feasible;

/// Square net-cost matrix over padded index sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LapInstance {
    pub net_cost: Matrix,
    pub m: usize,
    pub p: usize,
    pub q: usize,
}

impl LapInstance {
    pub fn h(&self) -> usize {
        self.net_cost.rows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LapSolution {
    pub assignment: AssignmentMatrix,
    pub objective: f64,
}

/// An EV sent to a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Dispatch {
    pub ev_id: usize,
    pub request: RequestRef,
}

fn energy_for_hops(hops: u32, graph: &CityGraph, cfg: &ScenarioConfig) -> f64 {
    f64::from(hops * graph.minutes_per_hop()) * cfg.drive_drain
}

/// Ride and charge costs for the given EVs and requests.
///
/// Idle EVs may take a ride whose pick-up is within `ride_hop_limit` hops and
/// a charge request within `charge_hop_limit` hops when their charge is at
/// most `soc_charge_eligibility` of capacity; either way the battery must
/// cover the whole trip (plus the way to the nearest charger in the
/// business-as-usual scenario, where EVs charge on their own). In the pooling
/// scenario a riding EV may also take a ride that [`pooling_feasible`]
/// accepts. Every other pair is infeasible.
pub fn build_cost_matrices(
    evs: &[Ev],
    rides: &[RideRequest],
    charges: &[ChargeRequest],
    graph: &CityGraph,
    cfg: &ScenarioConfig,
) -> Result<CostMatrices> {
    if cfg.hop_cost < 0.0 || !cfg.hop_cost.is_finite() {
        return Err(Error::Config(format!("hop cost must be non-negative, got {}", cfg.hop_cost)));
    }
    for ev in evs {
        if !graph.contains(ev.location) {
            return Err(Error::UnknownNode(ev.location));
        }
    }
    for r in rides {
        for node in [r.origin, r.destination] {
            if !graph.contains(node) {
                return Err(Error::UnknownNode(node));
            }
        }
    }
    for c in charges {
        if !graph.contains(c.facility) {
            return Err(Error::UnknownNode(c.facility));
        }
        if !graph.is_facility(c.facility) {
            return Err(Error::Config(format!("charge request {} at non-facility node {}", c.id, c.facility)));
        }
    }

    let (m, p, q) = (evs.len(), rides.len(), charges.len());
    let kappa = cfg.hop_cost;
    let battery = cfg.scenario.uses_battery();
    let mut c = Matrix::filled(m, p, INFEASIBLE_COST);
    let mut d = Matrix::filled(m, q, INFEASIBLE_COST);
    let mut a = Matrix::zeros(m, p);
    let mut w = Matrix::zeros(m, p);

    for (i, ev) in evs.iter().enumerate() {
        let seats_bonus = if cfg.scenario.pooling() { cfg.beta * ev.seats_free() as f64 } else { 0.0 };
        for (j, ride) in rides.iter().enumerate() {
            let pickup = graph.hops(ev.location, ride.origin);
            let trip = graph.hops(ride.origin, ride.destination);
            let cost = kappa * f64::from(pickup + trip);
            a[(i, j)] = cost;
            w[(i, j)] = ride.bid - cfg.alpha * cost + seats_bonus;
            let feasible = match ev.activity {
                Activity::Idle => {
                    // Without charge requests an EV must still be able to
                    // reach a charger once the trip is over.
                    let reserve = match (cfg.scenario, graph.nearest_facility(ride.destination)) {
                        (Scenario::BusinessAsUsual, Some(s)) => graph.hops(ride.destination, s),
                        _ => 0,
                    };
                    pickup <= cfg.ride_hop_limit
                        && (!battery || ev.soc - energy_for_hops(pickup + trip + reserve, graph, cfg) >= -1e-9)
                }
                Activity::Riding if cfg.scenario.pooling() => pooling_feasible(ev, ride, graph, cfg),
                _ => false,
            };
            if feasible {
                c[(i, j)] = cost;
            }
        }
        if ev.activity != Activity::Idle || !battery {
            continue;
        }
        for (k, req) in charges.iter().enumerate() {
            let hops = graph.hops(ev.location, req.facility);
            let feasible = hops <= cfg.charge_hop_limit
                && ev.soc <= cfg.soc_charge_eligibility * ev.battery_capacity
                && ev.soc - energy_for_hops(hops, graph, cfg) >= -1e-9;
            if feasible {
                d[(i, k)] = kappa * f64::from(hops);
            }
        }
    }

    let costs = CostMatrices { c, d, a, w };
    costs.validate()?;
    Ok(costs)
}

/// Pads to the `h x h` form with `h = max(m, p + q)`.
///
/// Real pairs cost `c - y` or `d - y`. Virtual agents cost
/// [`INFEASIBLE_COST`] against real counterparts and nothing against each
/// other, and carry no incentive.
pub fn pad_symmetric(costs: &CostMatrices, y: &IncentiveMatrix) -> LapInstance {
    let (m, p, q) = (costs.m(), costs.p(), costs.q());
    assert_eq!((y.m(), y.p(), y.q()), (m, p, q), "incentives do not match costs");
    let h = m.max(p + q);
    let net_cost = Matrix::from_fn(h, h, |i, j| match (i < m, j < p + q) {
        (true, true) if j < p => costs.c[(i, j)] - y.ride(i, j),
        (true, true) => costs.d[(i, j - p)] - y.charge(i, j - p),
        (false, false) => 0.0,
        _ => INFEASIBLE_COST,
    });
    LapInstance { net_cost, m, p, q }
}

/// Exact minimum-cost permutation, lexicographically smallest among ties.
pub fn solve_lap(inst: &LapInstance) -> LapSolution {
    let (perm, objective) = lap::solve(&inst.net_cost);
    LapSolution {
        assignment: AssignmentMatrix::new(inst.m, inst.p, inst.q, perm).expect("solver returns a permutation"),
        objective,
    }
}

/// Padded objective of an assignment under the given incentives.
pub fn rsp_objective(costs: &CostMatrices, y: &IncentiveMatrix, x: &AssignmentMatrix) -> f64 {
    let inst = pad_symmetric(costs, y);
    x.permutation().iter().enumerate().map(|(i, &j)| inst.net_cost[(i, j)]).sum()
}

/// Keeps matches between real EVs and real requests whose underlying cost is
/// not a sentinel. Indices map through `ev_ids`, `ride_ids`, `charge_ids`.
pub fn assignment_to_dispatch(
    x: &AssignmentMatrix,
    costs: &CostMatrices,
    ev_ids: &[usize],
    ride_ids: &[usize],
    charge_ids: &[usize],
) -> Vec<Dispatch> {
    let (m, p, q) = (costs.m(), costs.p(), costs.q());
    let mut out = Vec::new();
    for i in 0..m {
        let j = x.col_of(i);
        let (cost, request) = if j < p {
            (costs.c[(i, j)], RequestRef::Ride(ride_ids[j]))
        } else if j < p + q {
            (costs.d[(i, j - p)], RequestRef::Charge(charge_ids[j - p]))
        } else {
            continue;
        };
        if cost < FEASIBLE_COST_CEILING {
            out.push(Dispatch { ev_id: ev_ids[i], request });
        }
    }
    out
}
