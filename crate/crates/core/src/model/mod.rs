//! Domain types shared by every other module.

mod config;
mod fleet;
mod graph;
mod matrix;
mod metrics;
mod pv;

pub use config::{InitialSoc, Interval, Scenario, ScenarioConfig, Weather};
pub use fleet::{
    soc_band, Activity, ChargeRequest, ChargeStatus, Ev, Passenger, RequestRef, RideRequest, RideStatus,
    ScheduledPickup, SocBand,
};
pub use graph::{CityGraph, GraphSpec, NodeId};
pub use matrix::{AssignmentMatrix, CostMatrices, IncentiveMatrix, Matrix};
pub use metrics::{Metrics, SeriesRow};
pub use pv::PvProfile;

/// Cost marking an infeasible EV-request pair.
pub const INFEASIBLE_COST: f64 = 1e6;

/// Any legitimate cost must stay strictly below this; anything at or above it
/// is treated as a sentinel match.
pub const FEASIBLE_COST_CEILING: f64 = 1e5;

/// Minutes in the simulated day, 6:00 to 24:00.
pub const DAY_MINUTES: u32 = 1080;
