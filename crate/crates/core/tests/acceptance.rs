//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run with `cargo test --release --test acceptance`. Criterion 8 needs a
//! trip-record file; point `GREENRIDE_TLC` at one to enable it.

#![allow(clippy::needless_range_loop)]

mod common;

use std::time::Instant;

use rand::Rng;

use common::{
    brute_force_lap, central_difference, project_capped, projected_gradient, random_padded_costs, report, rng,
};
use greenride::assign::lap;
use greenride::bargain;
use greenride::equilibrium::{self, GamePoint};
use greenride::incentive::{ev_best_bids, ev_objective, utility_incentives, FacilitySubproblem};
use greenride::ingest;
use greenride::model::{InitialSoc, Interval, Matrix, Metrics, Scenario, ScenarioConfig, Weather};
use greenride::sim::{self, SimOptions, SimState};
use greenride::synth::random_epoch;

const SEEDS: [u64; 10] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10];
const WILLINGNESS: [f64; 4] = [0.25, 0.5, 0.75, 1.0];

enum Verdict {
    Pass,
    Fail,
    Blocked,
}

fn verdict(pass: bool) -> Verdict {
    if pass {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn lap_exactness() -> Verdict {
    let mut rng = rng(101);
    let start = Instant::now();
    let mut failures = 0;
    for n in 0..1000 {
        let h = 1 + n % 7;
        let cost = random_padded_costs(&mut rng, h);
        let (perm, total) = lap::solve(&cost);
        let mut seen = vec![false; h];
        let is_perm = perm.len() == h && perm.iter().all(|&j| j < h && !std::mem::replace(&mut seen[j], true));
        let best = brute_force_lap(&cost);
        let tol = 1e-9 * best.abs().max(1.0);
        // The integral solution is optimal for the relaxation when some
        // dual is feasible and tight on it.
        let (u, v) = lap::dual_potentials(&cost);
        let dual_feasible = (0..h).all(|i| (0..h).all(|j| cost[(i, j)] - u[i] - v[j] >= -tol));
        let tight = perm.iter().enumerate().all(|(i, &j)| (cost[(i, j)] - u[i] - v[j]).abs() <= tol);
        if !(is_perm && (total - best).abs() <= tol && dual_feasible && tight) {
            failures += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = report(1, failures == 0 && secs < 5.0, format!("{failures} failures in 1000 instances, {secs:.2} s"));
    verdict(pass)
}

fn incentive_best_responses() -> Verdict {
    let mut rng = rng(202);
    let start = Instant::now();
    let (mut worst, mut violations) = (0.0f64, 0);

    for _ in 0..500 {
        let n = rng.gen_range(1..=8);
        let lo = rng.gen_range(-3.0..1.0);
        let bounds = Interval::new(lo, lo + rng.gen_range(0.1..4.0));
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let feasible: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.7)).collect();
        let y = ev_best_bids(&w, &feasible, &[], bounds).unwrap();
        if y.iter().zip(&feasible).any(|(&v, &ok)| if ok { !bounds.contains(v) } else { v != 0.0 }) {
            violations += 1;
        }
        let project = |v: &[f64]| {
            v.iter().zip(&feasible).map(|(&x, &ok)| if ok { bounds.clamp(x) } else { 0.0 }).collect::<Vec<_>>()
        };
        let grad = |v: &[f64]| v.iter().zip(&w).map(|(a, b)| 2.0 * (a - b)).collect::<Vec<_>>();
        let oracle = projected_gradient(vec![0.0; n], grad, project, 0.25, 10_000);
        let masked = |v: &[f64]| -> Vec<f64> {
            v.iter().zip(&w).zip(&feasible).map(|((&a, &b), &ok)| if ok { a } else { b }).collect()
        };
        let closed = ev_objective(&masked(&y), &w);
        let reference = ev_objective(&masked(&oracle), &w);
        worst = worst.max((closed - reference).abs());
    }

    for s in 0..500 {
        let n = rng.gen_range(1..=6);
        let entry_box = Interval::new(0.0, rng.gen_range(0.2..3.0));
        let reach_hi = n as f64 * entry_box.hi;
        let b_lo = rng.gen_range(0.0..0.5 * reach_hi);
        let sum_box = Interval::new(b_lo, rng.gen_range(b_lo + 0.01..2.0 * reach_hi));
        let sub = FacilitySubproblem {
            facility: 3,
            assigned_pairs: (0..n).map(|i| (i, s % 3)).collect(),
            loss_target: rng.gen_range(-5.0..20.0),
            entry_box,
            sum_box,
        };
        let got = &utility_incentives(std::slice::from_ref(&sub)).unwrap()[0];
        if !entry_box.contains(got.per_pair) || !sum_box.contains(got.total) {
            violations += 1;
        }
        let l = sub.loss_target;
        let grad = |v: &[f64]| {
            let r = l - v.iter().sum::<f64>();
            vec![-2.0 * r; v.len()]
        };
        let project = |v: &[f64]| project_capped(v, entry_box, sum_box);
        let oracle = projected_gradient(vec![0.0; n], grad, project, 0.5 / n as f64, 10_000);
        let reference = sub.objective(&oracle);
        let closed = sub.objective(&vec![got.per_pair; n]);
        worst = worst.max((closed - reference).abs());
    }

    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-6 && violations == 0 && secs < 10.0;
    verdict(report(2, pass, format!("max objective gap {worst:.2e}, {violations} bound violations, {secs:.2} s")))
}

fn gradient_check() -> Verdict {
    let mut rng = rng(303);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let (m, p, q) = (rng.gen_range(1..=6), rng.gen_range(0..=4), rng.gen_range(0..=3));
        let inactive = rng.gen_bool(0.5);
        let problem = random_epoch(&mut rng, m, p, q, inactive);
        let h = problem.h();
        let z = GamePoint {
            x: Matrix::from_fn(h, h, |_, _| rng.gen_range(0.0..1.0)),
            y: Matrix::from_fn(h, h, |_, _| rng.gen_range(-2.0..2.0)),
        };
        let f = equilibrium::game_gradient(&problem, &z).unwrap().to_vec();
        let at = z.to_vec();
        let value = |owner: fn(&greenride::bargain::EpochProblem, &GamePoint) -> f64| {
            let problem = &problem;
            move |v: &[f64]| owner(problem, &GamePoint::from_vec(h, v).unwrap())
        };
        for k in 0..at.len() {
            let (i, j) = ((k % (h * h)) / h, k % h);
            let fd = if k < h * h {
                // Linear in X, so a unit step keeps the sentinel costs exact.
                central_difference(value(equilibrium::rsp_value), &at, k, 1.0)
            } else if i >= m {
                0.0
            } else if j < p {
                central_difference(value(equilibrium::ev_value), &at, k, 1e-4)
            } else if j < p + q {
                central_difference(value(equilibrium::puc_value), &at, k, 1e-4)
            } else {
                0.0
            };
            worst = worst.max((fd - f[k]).abs() / f[k].abs().max(1.0));
        }
    }
    verdict(report(3, worst <= 1e-6, format!("max relative error {worst:.2e} over 100 instances")))
}

fn fixed_point_and_merit() -> Verdict {
    let (mut reached, mut worst) = (0, 0.0f64);
    for seed in 0..200 {
        let problem = random_epoch(&mut rng(1000 + seed), 10, 5, 3, true);
        let outcome = bargain::solve(&problem, 20, 1e-9).unwrap();
        if outcome.converged() {
            reached += 1;
            let z = GamePoint::from_solution(&outcome.assignment, &outcome.incentives);
            worst = worst.max(equilibrium::merit(&problem, &z).unwrap());
        }
    }
    let pass = reached >= 190 && worst <= 1e-6;
    verdict(report(4, pass, format!("{reached}/200 fixed points, max merit {worst:.2e}")))
}

fn energy_conservation() -> Verdict {
    let mut worst = 0.0f64;
    for scenario in [Scenario::BusinessAsUsual, Scenario::Case1, Scenario::Case2] {
        let cfg = ScenarioConfig { scenario, ..ScenarioConfig::desk_scale() };
        let inputs = ingest::load_inputs(&cfg).unwrap();
        let mut state = SimState::new(&cfg, &inputs, SimOptions::default()).unwrap();
        let initial: f64 = state.fleet.iter().map(|ev| ev.soc).sum();
        while !state.is_done() {
            state.step().unwrap();
        }
        let last: f64 = state.fleet.iter().map(|ev| ev.soc).sum();
        let m = state.finish().unwrap().metrics;
        let drained = cfg.drive_drain * m.driving_minutes as f64;
        worst = worst.max((initial + m.charged_energy_kwh - drained - last).abs());
        worst = worst.max((m.final_soc_total_kwh - last).abs()).max((m.initial_soc_total_kwh - initial).abs());
    }
    verdict(report(5, worst <= 1e-9, format!("max energy residual {worst:.2e} kWh (bau, case1, case2)")))
}

fn runs(cfg: &ScenarioConfig) -> Vec<Metrics> {
    sim::run_seeds(cfg, &SEEDS, &SimOptions::default()).unwrap().into_iter().map(|o| o.metrics).collect()
}

fn mean(ms: &[Metrics], f: impl Fn(&Metrics) -> f64) -> f64 {
    ms.iter().map(f).sum::<f64>() / ms.len() as f64
}

fn charging_tracks_pv() -> Verdict {
    let share = |cfg: ScenarioConfig| {
        let ms = runs(&cfg);
        let in_pv: f64 = ms.iter().map(|m| m.charged_energy_in_pv_kwh).sum();
        in_pv / ms.iter().map(|m| m.charged_energy_kwh).sum::<f64>()
    };
    let desk = ScenarioConfig::desk_scale();
    let case1 = share(ScenarioConfig { scenario: Scenario::Case1, ..desk.clone() });
    let bau = share(ScenarioConfig { scenario: Scenario::BusinessAsUsual, ..desk.clone() });
    // Not part of the verdict: the same fleet starting fully charged.
    let bau_full =
        share(ScenarioConfig { scenario: Scenario::BusinessAsUsual, initial_soc: InitialSoc::Full, ..desk });
    let pass = case1 >= 0.8 && bau < 0.5;
    let detail = format!(
        "charging energy under PV: case1 {:.1}%, bau {:.1}% (bau from full charge {:.1}%)",
        100.0 * case1,
        100.0 * bau,
        100.0 * bau_full
    );
    verdict(report(6, pass, detail))
}

fn sharing_monotonicity() -> Verdict {
    let full = ScenarioConfig::default();
    let case1 = runs(&ScenarioConfig { scenario: Scenario::Case1, ..full.clone() });
    let sweep: Vec<Vec<Metrics>> = WILLINGNESS
        .iter()
        .map(|&willingness| runs(&ScenarioConfig { scenario: Scenario::Case2, willingness, ..full.clone() }))
        .collect();
    let qos: Vec<f64> = sweep.iter().map(|ms| mean(ms, |m| m.qos)).collect();
    let pl: Vec<f64> = sweep.iter().map(|ms| mean(ms, |m| m.pl)).collect();
    let qos1 = mean(&case1, |m| m.qos);
    let rising = |v: &[f64]| v.windows(2).all(|w| w[1] >= w[0]);
    let pass = rising(&qos) && rising(&pl) && qos[3] >= qos1;
    let pct = |v: &[f64]| v.iter().map(|x| format!("{:.2}", 100.0 * x)).collect::<Vec<_>>().join("/");
    let detail =
        format!("w=0.25/0.5/0.75/1: QoS {} PL {} (case1 QoS {:.2}, 100 EVs)", pct(&qos), pct(&pl), 100.0 * qos1);
    verdict(report(7, pass, detail))
}

fn headline_substitute() -> Verdict {
    let Some(path) = std::env::var_os("GREENRIDE_TLC").filter(|p| std::path::Path::new(p).is_file()) else {
        println!("criterion 8: BLOCKED (set GREENRIDE_TLC to a trip-record CSV)");
        return Verdict::Blocked;
    };
    let base = ScenarioConfig { tlc_path: Some(path.into()), ..ScenarioConfig::default() };
    let mut pass = true;
    let mut parts = Vec::new();
    for weather in Weather::ALL {
        let case1 = runs(&ScenarioConfig { scenario: Scenario::Case1, weather, ..base.clone() });
        let case2 = runs(&ScenarioConfig { scenario: Scenario::Case2, weather, willingness: 1.0, ..base.clone() });
        let (q1, q2, pl1) = (mean(&case1, |m| m.qos), mean(&case2, |m| m.qos), mean(&case1, |m| m.pl));
        pass &= q2 - q1 >= 0.03 && (0.15..=0.60).contains(&pl1);
        parts.push(format!("{}: QoS +{:.2} pp, case1 PL {:.1}%", weather.as_str(), 100.0 * (q2 - q1), 100.0 * pl1));
    }
    verdict(report(8, pass, parts.join("; ")))
}

fn fast_charge() -> Verdict {
    let base = ScenarioConfig::default();
    let slow = runs(&base);
    let fast = runs(&ScenarioConfig { charge_gain: 1.15, ..base });
    let (min_slow, min_fast) = (mean(&slow, |m| m.charging_minutes), mean(&fast, |m| m.charging_minutes));
    let (q_slow, q_fast) = (mean(&slow, |m| m.qos), mean(&fast, |m| m.qos));
    let pass = min_fast < min_slow && q_fast >= q_slow;
    let detail = format!(
        "charging minutes {min_slow:.0} -> {min_fast:.0}, QoS {:.2}% -> {:.2}%",
        100.0 * q_slow,
        100.0 * q_fast
    );
    verdict(report(9, pass, detail))
}

fn main() {
    let criteria: [fn() -> Verdict; 9] = [
        lap_exactness,
        incentive_best_responses,
        gradient_check,
        fixed_point_and_merit,
        energy_conservation,
        charging_tracks_pv,
        sharing_monotonicity,
        headline_substitute,
        fast_charge,
    ];
    let failed = criteria.iter().filter(|c| matches!(c(), Verdict::Fail)).count();
    println!("acceptance: {failed} of 9 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
