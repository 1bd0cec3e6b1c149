use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{NodeId, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Idle,
    ToPickup,
    Riding,
    ToCharger,
    Charging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestRef {
    Ride(usize),
    Charge(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Passenger {
    pub ride_id: usize,
    pub destination: NodeId,
    /// Latest acceptable drop-off minute; grows by the per-passenger dwell
    /// each time another rider is pooled in.
    pub deadline: u32,
    pub willing_to_share: bool,
}

/// A pooled rider the EV will pick up on its way.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPickup {
    pub ride_id: usize,
    pub node: NodeId,
    pub destination: NodeId,
    pub willing_to_share: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ev {
    pub id: usize,
    /// Last node reached.
    pub location: NodeId,
    /// Stored energy in kWh.
    pub soc: f64,
    pub battery_capacity: f64,
    pub activity: Activity,
    pub onboard: Vec<Passenger>,
    pub seats_total: usize,
    pub committed_request: Option<RequestRef>,
    /// Nodes still to visit on the current trip, next one first.
    pub route: VecDeque<NodeId>,
    /// Minutes driven on the current hop.
    pub hop_elapsed: u32,
    /// Stationary minutes left before the EV resumes driving.
    pub dwell: u32,
    pub pickups: Vec<ScheduledPickup>,
}

impl Ev {
    pub fn new(id: usize, location: NodeId, soc: f64, cfg: &ScenarioConfig) -> Self {
        Ev {
            id,
            location,
            soc,
            battery_capacity: cfg.battery_capacity,
            activity: Activity::Idle,
            onboard: Vec::new(),
            seats_total: cfg.seats_total,
            committed_request: None,
            route: VecDeque::new(),
            hop_elapsed: 0,
            dwell: 0,
            pickups: Vec::new(),
        }
    }

    /// Where the current trip ends: the last node of the route, or the
    /// current location when stationary.
    pub fn route_destination(&self) -> NodeId {
        self.route.back().copied().unwrap_or(self.location)
    }

    /// Riders on board or already promised a seat.
    pub fn seats_used(&self) -> usize {
        self.onboard.len() + self.pickups.len()
    }

    pub fn seats_free(&self) -> usize {
        self.seats_total.saturating_sub(self.seats_used())
    }

    /// Minutes until the route completes, counting dwell.
    pub fn remaining_minutes(&self, minutes_per_hop: u32) -> u32 {
        let hops = self.route.len() as u32;
        if hops == 0 {
            self.dwell
        } else {
            self.dwell + hops * minutes_per_hop - self.hop_elapsed
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RideStatus {
    Pending,
    Assigned,
    Completed,
    Missed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RideRequest {
    pub id: usize,
    pub submit_minute: u32,
    pub origin: NodeId,
    pub destination: NodeId,
    pub bid: f64,
    pub willing_to_share: bool,
    pub status: RideStatus,
}

impl RideRequest {
    pub fn new(id: usize, submit_minute: u32, origin: NodeId, destination: NodeId) -> Self {
        RideRequest {
            id,
            submit_minute,
            origin,
            destination,
            bid: 0.0,
            willing_to_share: false,
            status: RideStatus::Pending,
        }
    }

    /// Pick-up and drop-off in the same region; served without driving.
    pub fn is_degenerate(&self) -> bool {
        self.origin == self.destination
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChargeStatus {
    Pending,
    Assigned,
    Expired,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeRequest {
    pub id: usize,
    pub facility: NodeId,
    pub issue_minute: u32,
    pub status: ChargeStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SocBand {
    Low,
    Mid,
    High,
}

/// Low below the low threshold, High above the high threshold (both strict).
pub fn soc_band(ev: &Ev, cfg: &ScenarioConfig) -> SocBand {
    let frac = ev.soc / ev.battery_capacity;
    if frac < cfg.soc_low_threshold {
        SocBand::Low
    } else if frac > cfg.soc_high_threshold {
        SocBand::High
    } else {
        SocBand::Mid
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev_with(soc: f64) -> Ev {
        Ev::new(0, 1, soc, &ScenarioConfig::default())
    }

    #[test]
    fn soc_bands_use_strict_thresholds() {
        let cfg = ScenarioConfig::default();
        assert_eq!(soc_band(&ev_with(4.0), &cfg), SocBand::Low);
        assert_eq!(soc_band(&ev_with(5.0), &cfg), SocBand::Mid);
        assert_eq!(soc_band(&ev_with(30.0), &cfg), SocBand::Mid);
        assert_eq!(soc_band(&ev_with(30.5), &cfg), SocBand::High);
        assert_eq!(soc_band(&ev_with(50.0), &cfg), SocBand::High);
    }

    #[test]
    fn remaining_minutes_counts_dwell_and_partial_hop() {
        let mut ev = ev_with(20.0);
        ev.route = VecDeque::from([4, 7]);
        ev.hop_elapsed = 3;
        ev.dwell = 4;
        assert_eq!(ev.remaining_minutes(10), 4 + 20 - 3);
        assert_eq!(ev.route_destination(), 7);
    }
}
