//! Minute-by-minute simulation of one operating day, 6:00 to 24:00.
//!
//! Each minute admits new ride requests, issues charge requests from the PV
//! surplus, assigns EVs (plain assignment or bargaining, depending on the
//! scenario), moves the fleet one minute, expires stale requests and books
//! the metrics.

mod pooling;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use pooling::pooling_feasible;

use crate::assign::{self, Dispatch};
use crate::bargain::{self, EpochProblem};
use crate::error::{Error, Result};
use crate::model::{
    soc_band, Activity, ChargeRequest, ChargeStatus, CityGraph, Ev, IncentiveMatrix, InitialSoc, Metrics, Passenger,
    PvProfile, RequestRef, RideRequest, RideStatus, Scenario, ScenarioConfig, ScheduledPickup, SeriesRow, SocBand,
    DAY_MINUTES,
};
use crate::snapshot::EpochSnapshot;

/// Independent random streams derived from one seed.
pub(crate) mod stream {
    pub const REQUESTS: u64 = 1;
    pub const FLEET: u64 = 2;
    pub const BIDS: u64 = 3;
    pub const SAMPLE: u64 = 4;
}

pub(crate) fn rng_for(seed: u64, stream: u64) -> rand_chacha::ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Everything a day needs besides the configuration.
#[derive(Debug, Clone)]
pub struct SimInputs {
    pub graph: CityGraph,
    pub pv: PvProfile,
    /// Requests of the day; bids and sharing flags are drawn by the simulator.
    pub requests: Vec<RideRequest>,
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    /// Keep one row per bargaining iterate.
    pub trace: bool,
    /// Capture the first non-empty bargaining epoch at or after this minute.
    pub dump_epoch: Option<u32>,
}

/// One bargaining iterate of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub minute: u32,
    pub k: usize,
    pub rsp_objective: f64,
    pub puc_objective: f64,
    pub ev_objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub metrics: Metrics,
    pub series: Vec<SeriesRow>,
    pub trace: Vec<TraceRow>,
    pub snapshot: Option<EpochSnapshot>,
}

#[derive(Debug, Default, Clone)]
struct Books {
    received: usize,
    completed: usize,
    missed: usize,
    pv_available_kwh: f64,
    pv_used_kwh: f64,
    driving_minutes: u64,
    charging_minutes: f64,
    charged_kwh: f64,
    charged_in_pv_kwh: f64,
    epochs: usize,
    converged: usize,
    iterations: usize,
}

/// Bids `~ U[0, h_max]` and sharing flags for every request, in id order.
///
/// Sharing is decided by comparing one uniform draw per request with the
/// willingness, so runs that differ only in willingness share their draws and
/// the willing sets are nested.
pub fn draw_bids(requests: &mut [RideRequest], cfg: &ScenarioConfig) {
    let mut rng = rng_for(cfg.seed, stream::BIDS);
    for r in requests.iter_mut() {
        let bid: f64 = rng.gen::<f64>() * cfg.h_max;
        let share: f64 = rng.gen();
        r.bid = bid;
        r.willing_to_share = share < cfg.willingness;
    }
}

/// Initial fleet: uniform random nodes; charge uniform between the low
/// threshold and capacity, or full.
pub fn initial_fleet(cfg: &ScenarioConfig, graph: &CityGraph) -> Vec<Ev> {
    let mut rng = rng_for(cfg.seed, stream::FLEET);
    let nodes: Vec<_> = graph.nodes().collect();
    (0..cfg.fleet_size)
        .map(|id| {
            let at = nodes[rng.gen_range(0..nodes.len())];
            let u: f64 = rng.gen();
            let soc = match (cfg.scenario, cfg.initial_soc) {
                (Scenario::Fossil, _) | (_, InitialSoc::Full) => cfg.battery_capacity,
                (_, InitialSoc::Random) => {
                    cfg.battery_capacity * (cfg.soc_low_threshold + u * (1.0 - cfg.soc_low_threshold))
                }
            };
            Ev::new(id, at, soc, cfg)
        })
        .collect()
}

pub struct SimState<'a> {
    cfg: &'a ScenarioConfig,
    graph: &'a CityGraph,
    pv: &'a PvProfile,
    options: SimOptions,
    pub minute: u32,
    pub fleet: Vec<Ev>,
    /// All rides of the day; a ride's id is its index.
    pub rides: Vec<RideRequest>,
    next_ride: usize,
    pending: Vec<usize>,
    charges: Vec<ChargeRequest>,
    next_charge_id: usize,
    initial_soc_kwh: f64,
    books: Books,
    series: Vec<SeriesRow>,
    trace: Vec<TraceRow>,
    snapshot: Option<EpochSnapshot>,
}

impl<'a> SimState<'a> {
    pub fn new(cfg: &'a ScenarioConfig, inputs: &'a SimInputs, options: SimOptions) -> Result<Self> {
        cfg.validate()?;
        let graph = &inputs.graph;
        for &(s, _) in &cfg.stations {
            if !graph.is_facility(s) && graph.contains(s) {
                log::warn!("stations configured at node {s}, which is not a facility");
            }
        }
        let mut rides = inputs.requests.clone();
        rides.sort_by_key(|r| (r.submit_minute, r.id));
        for (idx, r) in rides.iter_mut().enumerate() {
            if !graph.contains(r.origin) || !graph.contains(r.destination) {
                return Err(Error::UnknownNode(if graph.contains(r.origin) { r.destination } else { r.origin }));
            }
            r.id = idx;
            r.status = RideStatus::Pending;
        }
        draw_bids(&mut rides, cfg);
        let fleet = initial_fleet(cfg, graph);
        let initial_soc_kwh = fleet.iter().map(|ev| ev.soc).sum();
        Ok(SimState {
            cfg,
            graph,
            pv: &inputs.pv,
            options,
            minute: 0,
            fleet,
            rides,
            next_ride: 0,
            pending: Vec::new(),
            charges: Vec::new(),
            next_charge_id: 0,
            initial_soc_kwh,
            books: Books::default(),
            series: Vec::new(),
            trace: Vec::new(),
            snapshot: None,
        })
    }

    pub fn is_done(&self) -> bool {
        self.minute >= DAY_MINUTES
    }

    /// Advances one minute.
    pub fn step(&mut self) -> Result<()> {
        if self.is_done() {
            return Err(Error::Invariant("simulation already finished".into()));
        }
        let t = self.minute;
        self.admit_rides(t);
        let issued = self.issue_charge_requests(t);
        let (ride_inc, charge_inc) =
            if t.is_multiple_of(self.cfg.assignment_period) { self.assign(t)? } else { (0.0, 0.0) };
        let draw_kw = self.advance(t)?;
        self.expire(t);
        self.book_minute(t, &draw_kw, issued, ride_inc, charge_inc);
        self.check_invariants()?;
        self.minute += 1;
        Ok(())
    }

    fn admit_rides(&mut self, t: u32) {
        while self.next_ride < self.rides.len() && self.rides[self.next_ride].submit_minute <= t {
            self.pending.push(self.next_ride);
            self.books.received += 1;
            self.next_ride += 1;
        }
    }

    /// `max(0, floor(P / p_ch) - charging - en route)` requests per facility.
    fn issue_charge_requests(&mut self, t: u32) -> usize {
        self.charges.clear();
        if !self.cfg.scenario.issues_charge_requests() {
            return 0;
        }
        for &s in self.graph.facilities() {
            let slots = (self.pv.power(s, t) / self.cfg.p_ch).floor() as i64;
            let charging =
                self.fleet.iter().filter(|ev| ev.activity == Activity::Charging && ev.location == s).count() as i64;
            let enroute = self
                .fleet
                .iter()
                .filter(|ev| ev.activity == Activity::ToCharger && ev.route_destination() == s)
                .count() as i64;
            for _ in 0..(slots - charging - enroute).max(0) {
                self.charges.push(ChargeRequest {
                    id: self.next_charge_id,
                    facility: s,
                    issue_minute: t,
                    status: ChargeStatus::Pending,
                });
                self.next_charge_id += 1;
            }
        }
        self.charges.len()
    }

    /// Runs the scenario's assignment and applies the dispatch. Returns the
    /// ride and charge incentives paid on dispatched pairs.
    fn assign(&mut self, t: u32) -> Result<(f64, f64)> {
        let cfg = self.cfg;
        if cfg.scenario == Scenario::BusinessAsUsual {
            self.send_low_evs_to_charge();
        }
        let any_candidate = self
            .fleet
            .iter()
            .any(|ev| ev.activity == Activity::Idle || (cfg.scenario.pooling() && ev.activity == Activity::Riding));
        let rides: Vec<RideRequest> = self.pending.iter().map(|&j| self.rides[j].clone()).collect();
        if !any_candidate || (rides.is_empty() && self.charges.is_empty()) {
            return Ok((0.0, 0.0));
        }

        let charges = if cfg.scenario.issues_charge_requests() { self.charges.clone() } else { Vec::new() };
        // The whole fleet goes in so loss targets see every charging EV; busy
        // EVs have no feasible pair and are compacted away.
        let problem = EpochProblem::build(t, &self.fleet, &rides, &charges, self.graph, cfg, self.pv)?.compact();

        let (dispatch, incentives) = if cfg.scenario.issues_charge_requests() {
            let outcome = bargain::solve(&problem, cfg.max_bargain_iters, cfg.bargain_tolerance)?;
            if problem.m() > 0 && problem.p() + problem.q() > 0 {
                self.books.epochs += 1;
                self.books.iterations += outcome.sweeps();
                if outcome.converged() {
                    self.books.converged += 1;
                }
            }
            if self.options.trace {
                for it in &outcome.trace.iterations {
                    self.trace.push(TraceRow {
                        minute: t,
                        k: it.k,
                        rsp_objective: it.rsp_objective,
                        puc_objective: it.puc_objective,
                        ev_objective: it.ev_objective,
                        converged: outcome.converged(),
                    });
                }
            }
            let dump_here = self.snapshot.is_none() && self.options.dump_epoch.is_some_and(|d| t >= d);
            if dump_here && problem.m() > 0 && problem.p() + problem.q() > 0 {
                self.snapshot = Some(EpochSnapshot::new(&problem, &outcome, cfg.merit_epsilon));
            }
            let sums = problem.dispatched_incentives(&outcome.assignment, &outcome.incentives);
            (problem.dispatch(&outcome.assignment), sums)
        } else {
            let y = IncentiveMatrix::zeros(problem.m(), problem.p(), problem.q());
            let sol = assign::solve_lap(&assign::pad_symmetric(&problem.costs, &y));
            (problem.dispatch(&sol.assignment), (0.0, 0.0))
        };
        for d in dispatch {
            self.apply(d, t)?;
        }
        Ok(incentives)
    }

    fn send_low_evs_to_charge(&mut self) {
        let cfg = self.cfg;
        for ev in self.fleet.iter_mut() {
            if ev.activity != Activity::Idle || ev.soc >= cfg.soc_low_threshold * ev.battery_capacity {
                continue;
            }
            let Some(s) = self.graph.nearest_facility(ev.location) else { continue };
            let need = f64::from(self.graph.travel_minutes(ev.location, s)) * cfg.drive_drain;
            if ev.soc + 1e-9 < need {
                continue;
            }
            if ev.location == s {
                ev.activity = Activity::Charging;
            } else {
                ev.activity = Activity::ToCharger;
                ev.route = VecDeque::from(self.graph.path(ev.location, s));
                ev.hop_elapsed = 0;
            }
        }
    }

    fn apply(&mut self, d: Dispatch, t: u32) -> Result<()> {
        let mph = self.graph.minutes_per_hop();
        let detour = self.cfg.detour_delay_per_passenger;
        let ev_idx = d.ev_id;
        match d.request {
            RequestRef::Ride(rid) => {
                let ride = self.rides[rid].clone();
                if ride.status != RideStatus::Pending {
                    return Err(Error::Invariant(format!("ride {rid} dispatched twice")));
                }
                self.rides[rid].status = RideStatus::Assigned;
                self.pending.retain(|&j| j != rid);
                let ev = &mut self.fleet[ev_idx];
                match ev.activity {
                    Activity::Idle => {
                        ev.committed_request = Some(RequestRef::Ride(rid));
                        if ev.location == ride.origin {
                            self.board_first(ev_idx, &ride, t);
                        } else {
                            let ev = &mut self.fleet[ev_idx];
                            ev.activity = Activity::ToPickup;
                            ev.route = VecDeque::from(self.graph.path(ev.location, ride.origin));
                            ev.hop_elapsed = 0;
                        }
                    }
                    Activity::Riding => {
                        for p in ev.onboard.iter_mut() {
                            p.deadline += detour;
                        }
                        if ride.origin == ev.location {
                            ev.dwell += detour;
                            let eta = t + ev.remaining_minutes(mph) + detour * ev.pickups.len() as u32;
                            ev.onboard.push(Passenger {
                                ride_id: rid,
                                destination: ride.destination,
                                deadline: eta,
                                willing_to_share: ride.willing_to_share,
                            });
                        } else {
                            ev.pickups.push(ScheduledPickup {
                                ride_id: rid,
                                node: ride.origin,
                                destination: ride.destination,
                                willing_to_share: ride.willing_to_share,
                            });
                        }
                    }
                    other => {
                        return Err(Error::Invariant(format!("ride dispatched to EV {ev_idx} while {other:?}")));
                    }
                }
            }
            RequestRef::Charge(cid) => {
                let Some(req) = self.charges.iter_mut().find(|c| c.id == cid) else {
                    return Err(Error::Invariant(format!("unknown charge request {cid}")));
                };
                req.status = ChargeStatus::Assigned;
                let facility = req.facility;
                let ev = &mut self.fleet[ev_idx];
                if ev.activity != Activity::Idle {
                    return Err(Error::Invariant(format!("charge request dispatched to busy EV {ev_idx}")));
                }
                ev.committed_request = Some(RequestRef::Charge(cid));
                if ev.location == facility {
                    ev.activity = Activity::Charging;
                } else {
                    ev.activity = Activity::ToCharger;
                    ev.route = VecDeque::from(self.graph.path(ev.location, facility));
                    ev.hop_elapsed = 0;
                }
            }
        }
        Ok(())
    }

    /// First rider boards at the current node; `now` is the boarding minute.
    fn board_first(&mut self, ev_idx: usize, ride: &RideRequest, now: u32) {
        let mph = self.graph.minutes_per_hop();
        let ev = &mut self.fleet[ev_idx];
        if ride.is_degenerate() {
            self.rides[ride.id].status = RideStatus::Completed;
            self.books.completed += 1;
            ev.activity = Activity::Idle;
            ev.committed_request = None;
            ev.route.clear();
            return;
        }
        ev.activity = Activity::Riding;
        ev.route = VecDeque::from(self.graph.path(ride.origin, ride.destination));
        ev.hop_elapsed = 0;
        ev.dwell = 0;
        let eta = now + ev.remaining_minutes(mph);
        ev.onboard.push(Passenger {
            ride_id: ride.id,
            destination: ride.destination,
            deadline: eta,
            willing_to_share: ride.willing_to_share,
        });
    }

    /// Moves every EV by one minute. Returns the charging draw per facility
    /// in kW.
    fn advance(&mut self, t: u32) -> Result<Vec<f64>> {
        let cfg = self.cfg;
        let battery = cfg.scenario.uses_battery();
        let mph = self.graph.minutes_per_hop();
        let facilities = self.graph.facilities().to_vec();
        let mut draw_kw = vec![0.0; facilities.len()];
        for idx in 0..self.fleet.len() {
            let activity = self.fleet[idx].activity;
            match activity {
                Activity::Idle => {}
                Activity::Charging => {
                    let ev = &mut self.fleet[idx];
                    let room = ev.battery_capacity - ev.soc;
                    let gain = room.min(cfg.charge_gain).max(0.0);
                    if gain >= room {
                        ev.soc = ev.battery_capacity;
                    } else {
                        ev.soc += gain;
                    }
                    self.books.charged_kwh += gain;
                    self.books.charging_minutes += gain / cfg.charge_gain;
                    if self.pv.power(ev.location, t) > 0.0 {
                        self.books.charged_in_pv_kwh += gain;
                    }
                    if let Some(f) = facilities.iter().position(|&s| s == ev.location) {
                        draw_kw[f] += gain * 60.0;
                    }
                    if ev.soc >= ev.battery_capacity {
                        ev.activity = Activity::Idle;
                        ev.committed_request = None;
                    }
                }
                Activity::ToPickup | Activity::Riding | Activity::ToCharger => {
                    let ev = &mut self.fleet[idx];
                    if ev.dwell > 0 {
                        ev.dwell -= 1;
                        if ev.dwell == 0 && ev.route.is_empty() {
                            self.arrive(idx, t + 1)?;
                        }
                        continue;
                    }
                    if ev.route.is_empty() {
                        self.arrive(idx, t + 1)?;
                        continue;
                    }
                    ev.hop_elapsed += 1;
                    if battery {
                        ev.soc -= cfg.drive_drain;
                    }
                    self.books.driving_minutes += 1;
                    if ev.hop_elapsed >= mph {
                        ev.location = ev.route.pop_front().expect("route is non-empty");
                        ev.hop_elapsed = 0;
                        self.arrive(idx, t + 1)?;
                    }
                }
            }
        }
        Ok(draw_kw)
    }

    /// Events at the node just reached; `now` is the minute that begins.
    fn arrive(&mut self, idx: usize, now: u32) -> Result<()> {
        let mph = self.graph.minutes_per_hop();
        let detour = self.cfg.detour_delay_per_passenger;
        match self.fleet[idx].activity {
            Activity::ToPickup => {
                if !self.fleet[idx].route.is_empty() {
                    return Ok(());
                }
                let Some(RequestRef::Ride(rid)) = self.fleet[idx].committed_request else {
                    return Err(Error::Invariant(format!("EV {idx} heading to a pick-up without a ride")));
                };
                let ride = self.rides[rid].clone();
                self.board_first(idx, &ride, now);
            }
            Activity::Riding => {
                let ev = &mut self.fleet[idx];
                let here = ev.location;
                let boarding: Vec<ScheduledPickup> = ev.pickups.iter().filter(|p| p.node == here).cloned().collect();
                if !boarding.is_empty() && !ev.route.is_empty() {
                    ev.pickups.retain(|p| p.node != here);
                    ev.dwell += detour * boarding.len() as u32;
                    let eta = now + ev.remaining_minutes(mph) + detour * ev.pickups.len() as u32;
                    for p in boarding {
                        ev.onboard.push(Passenger {
                            ride_id: p.ride_id,
                            destination: p.destination,
                            deadline: eta,
                            willing_to_share: p.willing_to_share,
                        });
                    }
                    return Ok(());
                }
                if ev.route.is_empty() && ev.dwell == 0 {
                    // Riders scheduled at the final node board and leave at once.
                    for p in std::mem::take(&mut ev.pickups) {
                        if p.node != here {
                            return Err(Error::Invariant(format!(
                                "EV {idx} finished its trip with rider {} still waiting at node {}",
                                p.ride_id, p.node
                            )));
                        }
                        ev.onboard.push(Passenger {
                            ride_id: p.ride_id,
                            destination: p.destination,
                            deadline: now,
                            willing_to_share: p.willing_to_share,
                        });
                    }
                    for p in std::mem::take(&mut ev.onboard) {
                        if p.destination != here || now > p.deadline {
                            return Err(Error::Invariant(format!(
                                "rider {} dropped at node {here}, minute {now}; wanted node {} by minute {}",
                                p.ride_id, p.destination, p.deadline
                            )));
                        }
                        self.rides[p.ride_id].status = RideStatus::Completed;
                        self.books.completed += 1;
                    }
                    ev.activity = Activity::Idle;
                    ev.committed_request = None;
                }
            }
            Activity::ToCharger => {
                let ev = &mut self.fleet[idx];
                if ev.route.is_empty() {
                    ev.activity = Activity::Charging;
                }
            }
            Activity::Idle | Activity::Charging => {}
        }
        Ok(())
    }

    /// Rides left unassigned for `max_wait_minutes` attempts are missed;
    /// charge requests live for one minute.
    fn expire(&mut self, t: u32) {
        let max_wait = self.cfg.max_wait_minutes;
        let rides = &mut self.rides;
        let mut missed = 0;
        self.pending.retain(|&j| {
            if t + 1 - rides[j].submit_minute >= max_wait {
                rides[j].status = RideStatus::Missed;
                missed += 1;
                false
            } else {
                true
            }
        });
        self.books.missed += missed;
        for c in self.charges.iter_mut().filter(|c| c.status == ChargeStatus::Pending) {
            c.status = ChargeStatus::Expired;
        }
    }

    fn book_minute(&mut self, t: u32, draw_kw: &[f64], issued: usize, ride_inc: f64, charge_inc: f64) {
        let facilities = self.graph.facilities();
        let pv_kw: Vec<f64> = facilities.iter().map(|&s| self.pv.power(s, t)).collect();
        if self.cfg.scenario.uses_battery() {
            for (p, d) in pv_kw.iter().zip(draw_kw) {
                self.books.pv_available_kwh += p / 60.0;
                self.books.pv_used_kwh += d.min(*p) / 60.0;
            }
        }
        let mut row = SeriesRow {
            minute: t,
            idle: 0,
            to_pickup: 0,
            riding: 0,
            to_charger: 0,
            charging: 0,
            soc_low: 0,
            soc_mid: 0,
            soc_high: 0,
            pv_kw,
            charging_kw: draw_kw.to_vec(),
            ride_incentives: ride_inc,
            charge_incentives: charge_inc,
            cumulative_missed: self.books.missed,
            pending_rides: self.pending.len(),
            charge_requests: issued,
        };
        for ev in &self.fleet {
            match ev.activity {
                Activity::Idle => row.idle += 1,
                Activity::ToPickup => row.to_pickup += 1,
                Activity::Riding => row.riding += 1,
                Activity::ToCharger => row.to_charger += 1,
                Activity::Charging => row.charging += 1,
            }
            match soc_band(ev, self.cfg) {
                SocBand::Low => row.soc_low += 1,
                SocBand::Mid => row.soc_mid += 1,
                SocBand::High => row.soc_high += 1,
            }
        }
        self.series.push(row);
    }

    fn check_invariants(&self) -> Result<()> {
        for ev in &self.fleet {
            if ev.soc < -1e-9 || ev.soc > ev.battery_capacity + 1e-9 {
                return Err(Error::Invariant(format!("EV {} has charge {} kWh", ev.id, ev.soc)));
            }
            if ev.seats_used() > ev.seats_total {
                return Err(Error::Invariant(format!("EV {} carries {} riders", ev.id, ev.seats_used())));
            }
            if ev.activity == Activity::Charging && !self.graph.is_facility(ev.location) {
                return Err(Error::Invariant(format!("EV {} charging at node {}", ev.id, ev.location)));
            }
        }
        Ok(())
    }

    pub fn finish(self) -> Result<SimOutput> {
        let b = &self.books;
        let cfg = self.cfg;
        let final_soc: f64 = self.fleet.iter().map(|ev| ev.soc).sum();
        let open = b.received - b.completed - b.missed;
        let in_flight = self.pending.len()
            + self.rides[..self.next_ride].iter().filter(|r| r.status == RideStatus::Assigned).count();
        if open != in_flight {
            return Err(Error::Invariant(format!(
                "{} received, {} completed, {} missed, but {} still open",
                b.received, b.completed, b.missed, in_flight
            )));
        }
        let pl = if cfg.scenario.uses_battery() { Metrics::pl_of(b.pv_available_kwh, b.pv_used_kwh) } else { None };
        let metrics = Metrics {
            scenario: cfg.scenario,
            weather: self.pv.weather.unwrap_or(cfg.weather),
            willingness: cfg.willingness,
            seed: cfg.seed,
            received_rides: b.received,
            completed_rides: b.completed,
            missed_rides: b.missed,
            open_rides: open,
            qos: Metrics::qos_of(b.received, b.missed),
            pv_available_kwh: b.pv_available_kwh,
            pv_used_kwh: b.pv_used_kwh,
            pl: pl.unwrap_or(0.0),
            pl_defined: pl.is_some(),
            driving_minutes: b.driving_minutes,
            charging_minutes: b.charging_minutes,
            charged_energy_kwh: b.charged_kwh,
            charged_energy_in_pv_kwh: b.charged_in_pv_kwh,
            initial_soc_total_kwh: self.initial_soc_kwh,
            final_soc_total_kwh: final_soc,
            bargain_epochs: b.epochs,
            bargain_converged: b.converged,
            bargain_iterations: b.iterations,
        };
        Ok(SimOutput { metrics, series: self.series, trace: self.trace, snapshot: self.snapshot })
    }
}

/// Simulates one day.
pub fn run_scenario(cfg: &ScenarioConfig, inputs: &SimInputs, options: SimOptions) -> Result<SimOutput> {
    let mut state = SimState::new(cfg, inputs, options)?;
    while !state.is_done() {
        state.step()?;
    }
    state.finish()
}

/// One day per seed, in parallel; inputs are loaded per seed since synthetic
/// requests and subsamples depend on it. Results come back in seed order.
pub fn run_seeds(cfg: &ScenarioConfig, seeds: &[u64], options: &SimOptions) -> Result<Vec<SimOutput>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = ScenarioConfig { seed, ..cfg.clone() };
            let inputs = crate::ingest::load_inputs(&cfg)?;
            run_scenario(&cfg, &inputs, options.clone())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(cfg: &ScenarioConfig, requests: Vec<RideRequest>) -> SimInputs {
        let graph = CityGraph::default_manhattan();
        let pv = crate::ingest::builtin_pv(cfg.weather, &graph, cfg);
        SimInputs { graph, pv, requests }
    }

    fn one_ev(scenario: Scenario) -> ScenarioConfig {
        ScenarioConfig { scenario, fleet_size: 1, initial_soc: InitialSoc::Full, ..ScenarioConfig::default() }
    }

    #[test]
    fn ten_minutes_of_driving_cost_one_kwh() {
        let cfg = one_ev(Scenario::Case1);
        let inp = inputs(&cfg, vec![]);
        let mut st = SimState::new(&cfg, &inp, SimOptions::default()).unwrap();
        st.fleet[0].location = 2;
        st.fleet[0].activity = Activity::ToCharger;
        st.fleet[0].route = VecDeque::from([3]);
        let before = st.fleet[0].soc;
        for _ in 0..10 {
            st.step().unwrap();
        }
        assert!((before - st.fleet[0].soc - 1.0).abs() < 1e-12);
        assert_eq!(st.fleet[0].location, 3);
        assert_eq!(st.fleet[0].activity, Activity::Charging);
    }

    #[test]
    fn empty_battery_takes_250_minutes() {
        let cfg = one_ev(Scenario::BusinessAsUsual);
        let inp = inputs(&cfg, vec![]);
        let mut st = SimState::new(&cfg, &inp, SimOptions::default()).unwrap();
        st.fleet[0].location = 5;
        st.fleet[0].soc = 0.0;
        st.fleet[0].activity = Activity::Charging;
        let mut minutes = 0;
        while st.fleet[0].activity == Activity::Charging {
            st.step().unwrap();
            minutes += 1;
        }
        assert_eq!(minutes, 250);
        assert_eq!(st.fleet[0].soc, 50.0);
    }

    #[test]
    fn charge_requests_follow_the_surplus() {
        let cfg = ScenarioConfig { fleet_size: 1, ..ScenarioConfig::default() };
        let mut inp = inputs(&cfg, vec![]);
        inp.pv = PvProfile::dark(inp.graph.facilities(), DAY_MINUTES as usize);
        inp.pv.series[0][0] = 50.0;
        let mut st = SimState::new(&cfg, &inp, SimOptions::default()).unwrap();
        st.fleet[0].activity = Activity::Riding;
        st.fleet[0].route = VecDeque::from([2]);
        assert_eq!(st.issue_charge_requests(0), 4);
        assert_eq!(st.issue_charge_requests(1), 0);
    }

    #[test]
    fn single_ride_is_served_and_books_balance() {
        let cfg = one_ev(Scenario::Case1);
        let mut inp = inputs(&cfg, vec![]);
        let start = initial_fleet(&cfg, &inp.graph)[0].location;
        let dest = if start == 1 { 2 } else { 1 };
        inp.requests = vec![RideRequest::new(0, 3, start, dest)];
        let out = run_scenario(&cfg, &inp, SimOptions::default()).unwrap();
        let m = &out.metrics;
        assert_eq!((m.received_rides, m.completed_rides, m.missed_rides), (1, 1, 0));
        let identity =
            m.initial_soc_total_kwh - cfg.drive_drain * m.driving_minutes as f64 + cfg.charge_gain * m.charging_minutes;
        assert!((identity - m.final_soc_total_kwh).abs() < 1e-9);
        assert_eq!(out.series.len(), DAY_MINUTES as usize);
    }

    #[test]
    fn unreachable_rides_are_missed_after_the_wait() {
        let cfg = one_ev(Scenario::Fossil);
        let mut inp = inputs(&cfg, vec![]);
        let start = initial_fleet(&cfg, &inp.graph)[0].location;
        let far = inp.graph.nodes().find(|&v| inp.graph.hops(start, v) > 2);
        let Some(far) = far else { return };
        inp.requests = vec![RideRequest::new(0, 0, far, start)];
        let mut st = SimState::new(&cfg, &inp, SimOptions::default()).unwrap();
        for _ in 0..9 {
            st.step().unwrap();
        }
        assert_eq!(st.books.missed, 0);
        st.step().unwrap();
        assert_eq!(st.books.missed, 1);
    }

    #[test]
    fn bids_and_sharing_are_nested_across_willingness() {
        let mut a: Vec<RideRequest> = (0..200).map(|i| RideRequest::new(i, 0, 1, 2)).collect();
        let mut b = a.clone();
        draw_bids(&mut a, &ScenarioConfig { willingness: 0.25, ..ScenarioConfig::default() });
        draw_bids(&mut b, &ScenarioConfig { willingness: 0.75, ..ScenarioConfig::default() });
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.bid, y.bid);
            assert!((0.0..=2.0).contains(&x.bid));
            assert!(!x.willing_to_share || y.willing_to_share);
        }
        let n = b.iter().filter(|r| r.willing_to_share).count();
        assert!((100..200).contains(&n));
    }
}
