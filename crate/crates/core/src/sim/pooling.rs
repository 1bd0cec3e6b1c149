use crate::model::{Activity, CityGraph, Ev, RideRequest, ScenarioConfig};

/// Whether a riding EV may pool `ride` on its current trip.
///
/// The rider must be willing to share, as must everyone already on board or
/// scheduled; the destinations must coincide; the pick-up must lie on the
/// remaining route, which starts at the EV's location (the last node it
/// reached, even mid-hop); and a seat must be free. Pooling adds dwell time at the pick-up but no
/// detour, and every passenger's deadline is extended by the same dwell, so
/// the deadline condition reduces to the seat count. The simulator still
/// checks each deadline at drop-off.
pub fn pooling_feasible(ev: &Ev, ride: &RideRequest, graph: &CityGraph, cfg: &ScenarioConfig) -> bool {
    if ev.activity != Activity::Riding || ev.route.is_empty() || !ride.willing_to_share {
        return false;
    }
    if ev.seats_free() == 0 || ev.seats_used() >= cfg.seats_total {
        return false;
    }
    let everyone_willing =
        ev.onboard.iter().all(|p| p.willing_to_share) && ev.pickups.iter().all(|p| p.willing_to_share);
    if !everyone_willing || ride.destination != ev.route_destination() {
        return false;
    }
    let on_path = ride.origin == ev.location || ev.route.contains(&ride.origin);
    on_path && graph.contains(ride.origin)
}
