//! Generated inputs: a diurnal request stream for runs without a TLC file,
//! and random bargaining epochs for property tests.

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;

use crate::bargain::{EpochProblem, FacilityTerms};
use crate::model::{CityGraph, CostMatrices, Interval, Matrix, RideRequest, DAY_MINUTES, INFEASIBLE_COST};
use crate::sim::{rng_for, stream};

/// Relative hourly demand from 6:00 to 23:00, shaped like weekday yellow-taxi
/// pickups: a slow morning build-up, a plateau through the afternoon and an
/// evening peak around 18:00-19:00.
const HOURLY_DEMAND: [f64; 18] =
    [2.0, 3.5, 4.5, 5.0, 5.0, 5.0, 5.3, 5.4, 5.8, 6.0, 5.8, 6.5, 7.2, 6.8, 6.0, 6.0, 5.5, 4.5];

/// Relative request rate at `minute`, interpolated linearly between hour
/// midpoints.
pub fn request_rate(minute: u32) -> f64 {
    let x = (f64::from(minute) - 30.0) / 60.0;
    let last = HOURLY_DEMAND.len() - 1;
    if x <= 0.0 {
        return HOURLY_DEMAND[0];
    }
    let i = (x.floor() as usize).min(last);
    let next = (i + 1).min(last);
    let frac = x - i as f64;
    HOURLY_DEMAND[i] + (HOURLY_DEMAND[next] - HOURLY_DEMAND[i]) * frac.min(1.0)
}

/// `count` requests with submission minutes drawn from [`request_rate`] and
/// independent uniform origins and destinations, sorted by minute.
pub fn diurnal_requests(count: usize, graph: &CityGraph, seed: u64) -> Vec<RideRequest> {
    let mut rng = rng_for(seed, stream::REQUESTS);
    let weights: Vec<f64> = (0..DAY_MINUTES).map(request_rate).collect();
    let minutes = WeightedIndex::new(&weights).expect("rates are positive");
    let n = graph.node_count();
    let mut out: Vec<RideRequest> = (0..count)
        .map(|id| {
            let t = minutes.sample(&mut rng) as u32;
            let o = rng.gen_range(1..=n);
            let d = rng.gen_range(1..=n);
            RideRequest::new(id, t, o, d)
        })
        .collect();
    out.sort_by_key(|r| (r.submit_minute, r.id));
    for (id, r) in out.iter_mut().enumerate() {
        r.id = id;
    }
    out
}

/// A random epoch with `m` EVs, `p` rides and `q` charge requests spread over
/// two facilities. About a fifth of the pairs are infeasible. With
/// `inactive_sums` the facility sum boxes are wide enough never to bind.
pub fn random_epoch(rng: &mut impl Rng, m: usize, p: usize, q: usize, inactive_sums: bool) -> EpochProblem {
    let ride_box = Interval::new(-2.0, 2.0);
    let charge_box = Interval::new(0.0, 2.4);
    let mut c = Matrix::filled(m, p, INFEASIBLE_COST);
    let mut a = Matrix::zeros(m, p);
    let mut w = Matrix::zeros(m, p);
    let mut d = Matrix::filled(m, q, INFEASIBLE_COST);
    let bids: Vec<f64> = (0..p).map(|_| rng.gen_range(0.0..2.0)).collect();
    for i in 0..m {
        for j in 0..p {
            let cost = f64::from(rng.gen_range(1..=5u32));
            a[(i, j)] = cost;
            w[(i, j)] = bids[j] - 0.5 * cost;
            if rng.gen::<f64>() > 0.2 {
                c[(i, j)] = cost;
            }
        }
        for k in 0..q {
            if rng.gen::<f64>() > 0.2 {
                d[(i, k)] = f64::from(rng.gen_range(0..=1u32));
            }
        }
    }
    let facilities = (0..2)
        .map(|f| FacilityTerms {
            facility: [3, 5][f],
            loss_target: rng.gen_range(0.0..6.0),
            sum_box: if inactive_sums { Interval::new(-1e9, 1e9) } else { Interval::new(0.0, rng.gen_range(0.5..5.0)) },
        })
        .collect();
    EpochProblem {
        minute: 0,
        ev_ids: (0..m).collect(),
        ride_ids: (0..p).collect(),
        charge_ids: (0..q).collect(),
        costs: CostMatrices { c, d, a, w },
        charge_facility: (0..q).map(|k| k % 2).collect(),
        facilities,
        ride_box,
        charge_box,
    }
}
