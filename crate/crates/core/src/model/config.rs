use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NodeId;
use crate::error::{Error, Result};

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Interval { lo: v, hi: v }
    }

    /// Also true when either end is NaN.
    pub fn is_empty(&self) -> bool {
        self.lo.partial_cmp(&self.hi).is_none_or(|o| o.is_gt())
    }

    pub fn clamp(&self, v: f64) -> f64 {
        v.max(self.lo).min(self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }

    pub fn intersect(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.max(other.lo), self.hi.min(other.hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Combustion fleet: no batteries, rides only.
    Fossil,
    /// Rides only; EVs head to the nearest facility when their battery is low.
    BusinessAsUsual,
    /// Rides and utility charge requests, assigned through bargaining.
    Case1,
    /// Case 1 plus pooling of riders sharing a destination.
    Case2,
}

impl Scenario {
    pub fn uses_battery(self) -> bool {
        self != Scenario::Fossil
    }

    pub fn issues_charge_requests(self) -> bool {
        matches!(self, Scenario::Case1 | Scenario::Case2)
    }

    pub fn pooling(self) -> bool {
        self == Scenario::Case2
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Fossil => "fossil",
            Scenario::BusinessAsUsual => "business_as_usual",
            Scenario::Case1 => "case1",
            Scenario::Case2 => "case2",
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fossil" => Scenario::Fossil,
            "business_as_usual" | "bau" => Scenario::BusinessAsUsual,
            "case1" => Scenario::Case1,
            "case2" => Scenario::Case2,
            other => return Err(Error::Config(format!("unknown scenario {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weather {
    Sunny,
    CloudyMorning,
    CloudyAfternoon,
}

impl Weather {
    pub const ALL: [Weather; 3] = [Weather::Sunny, Weather::CloudyMorning, Weather::CloudyAfternoon];

    pub fn as_str(self) -> &'static str {
        match self {
            Weather::Sunny => "sunny",
            Weather::CloudyMorning => "cloudy_morning",
            Weather::CloudyAfternoon => "cloudy_afternoon",
        }
    }
}

impl FromStr for Weather {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "sunny" => Weather::Sunny,
            "cloudy_morning" => Weather::CloudyMorning,
            "cloudy_afternoon" => Weather::CloudyAfternoon,
            other => return Err(Error::Config(format!("unknown weather {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialSoc {
    /// Uniform between the low threshold and full capacity.
    Random,
    Full,
}

/// Every tunable of a simulated day. Units: kWh, kW, minutes, currency units.
///
/// Unset incentive bounds fall back to values derived from the other
/// parameters; see the `*_box` accessors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub weather: Weather,
    pub fleet_size: usize,
    pub battery_capacity: f64,
    /// kWh drained per driving minute.
    pub drive_drain: f64,
    /// kWh gained per charging minute.
    pub charge_gain: f64,
    /// kW attributed to each charging EV when sizing charge requests and loss targets.
    pub p_ch: f64,
    pub assignment_period: u32,
    pub ride_hop_limit: u32,
    pub charge_hop_limit: u32,
    /// EVs above this fraction of capacity may not take a charge request.
    pub soc_charge_eligibility: f64,
    pub soc_low_threshold: f64,
    pub soc_high_threshold: f64,
    pub seats_total: usize,
    /// Monetary cost per hop driven.
    pub hop_cost: f64,
    pub h_max: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub l_min: Option<f64>,
    pub l_max: Option<f64>,
    pub b_min: Option<f64>,
    pub b_max: Option<f64>,
    /// Price of renewable energy; constant unless `c_rer_hourly` is given.
    pub c_rer: f64,
    /// One price per hour from 6:00, overriding `c_rer`.
    pub c_rer_hourly: Option<Vec<f64>>,
    pub willingness: f64,
    pub max_wait_minutes: u32,
    pub detour_delay_per_passenger: u32,
    pub initial_soc: InitialSoc,
    pub seed: u64,
    pub max_bargain_iters: usize,
    pub bargain_tolerance: f64,
    pub merit_epsilon: f64,
    pub station_peak_kw: f64,
    /// `(facility node, number of stations)`.
    pub stations: Vec<(NodeId, u32)>,
    pub graph_path: Option<PathBuf>,
    pub tlc_path: Option<PathBuf>,
    pub region_map_path: Option<PathBuf>,
    pub pv_path: Option<PathBuf>,
    /// Restrict TLC rows to this date (`YYYY-MM-DD`).
    pub tlc_date: Option<String>,
    pub sample_size: usize,
    /// Number of generated requests when no TLC file is configured.
    pub synthetic_requests: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            scenario: Scenario::Case1,
            weather: Weather::Sunny,
            fleet_size: 100,
            battery_capacity: 50.0,
            drive_drain: 0.1,
            charge_gain: 0.2,
            p_ch: 12.0,
            assignment_period: 1,
            ride_hop_limit: 2,
            charge_hop_limit: 1,
            soc_charge_eligibility: 2.0 / 3.0,
            soc_low_threshold: 0.10,
            soc_high_threshold: 0.60,
            seats_total: 4,
            hop_cost: 1.0,
            h_max: 2.0,
            alpha: 0.5,
            beta: 0.25,
            r_min: None,
            r_max: None,
            l_min: None,
            l_max: None,
            b_min: None,
            b_max: None,
            c_rer: 0.1,
            c_rer_hourly: None,
            willingness: 1.0,
            max_wait_minutes: 10,
            detour_delay_per_passenger: 4,
            initial_soc: InitialSoc::Random,
            seed: 1,
            max_bargain_iters: 20,
            bargain_tolerance: 1e-9,
            merit_epsilon: 1e-6,
            station_peak_kw: 25.0,
            stations: vec![(3, 2), (5, 3), (8, 2), (9, 3)],
            graph_path: None,
            tlc_path: None,
            region_map_path: None,
            pv_path: None,
            tlc_date: None,
            sample_size: 2462,
            synthetic_requests: 2462,
        }
    }
}

impl ScenarioConfig {
    /// Twenty EVs and about five hundred generated requests.
    pub fn desk_scale() -> Self {
        ScenarioConfig { fleet_size: 20, synthetic_requests: 500, sample_size: 500, ..ScenarioConfig::default() }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn ride_box(&self) -> Interval {
        Interval::new(self.r_min.unwrap_or(-self.h_max), self.r_max.unwrap_or(self.h_max))
    }

    /// Per-pair charge incentive box. The default upper bound is twice the
    /// value of one hour of charging at `p_ch`.
    pub fn charge_box(&self) -> Interval {
        Interval::new(self.l_min.unwrap_or(0.0), self.l_max.unwrap_or(2.0 * self.c_rer * self.p_ch))
    }

    /// Bounds on a facility's total incentive. The default cap is the
    /// renewable price times the facility's peak generation.
    pub fn sum_box(&self, facility_peak_kw: f64) -> Interval {
        Interval::new(self.b_min.unwrap_or(0.0), self.b_max.unwrap_or(self.c_rer * facility_peak_kw))
    }

    pub fn c_rer_at(&self, minute: u32) -> f64 {
        match &self.c_rer_hourly {
            Some(hourly) if !hourly.is_empty() => {
                let idx = ((minute / 60) as usize).min(hourly.len() - 1);
                hourly[idx]
            }
            _ => self.c_rer,
        }
    }

    pub fn stations_at(&self, facility: NodeId) -> u32 {
        self.stations.iter().find(|&&(s, _)| s == facility).map_or(0, |&(_, n)| n)
    }

    /// kW drawn by one charging EV.
    pub fn charge_power_kw(&self) -> f64 {
        self.charge_gain * 60.0
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        let positive = [
            ("battery_capacity", self.battery_capacity),
            ("drive_drain", self.drive_drain),
            ("charge_gain", self.charge_gain),
            ("p_ch", self.p_ch),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if self.hop_cost < 0.0 || !self.hop_cost.is_finite() {
            return fail(format!("hop_cost must be non-negative, got {}", self.hop_cost));
        }
        if self.assignment_period == 0 {
            return fail("assignment_period must be at least 1".into());
        }
        if self.fleet_size == 0 {
            return fail("fleet_size must be positive".into());
        }
        for (name, v) in [
            ("willingness", self.willingness),
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("soc_charge_eligibility", self.soc_charge_eligibility),
            ("soc_low_threshold", self.soc_low_threshold),
            ("soc_high_threshold", self.soc_high_threshold),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return fail(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        if self.soc_low_threshold > self.soc_high_threshold {
            return fail("soc_low_threshold exceeds soc_high_threshold".into());
        }
        if self.h_max < 0.0 {
            return fail(format!("h_max must be non-negative, got {}", self.h_max));
        }
        if self.c_rer < 0.0 || self.c_rer_hourly.iter().flatten().any(|&c| c < 0.0) {
            return fail("renewable price must be non-negative".into());
        }
        for (name, b) in [("r_min/r_max", self.ride_box()), ("l_min/l_max", self.charge_box())] {
            if b.is_empty() {
                return fail(format!("{name}: lower bound {} exceeds upper bound {}", b.lo, b.hi));
            }
        }
        if let (Some(lo), Some(hi)) = (self.b_min, self.b_max) {
            if lo > hi {
                return fail(format!("b_min {lo} exceeds b_max {hi}"));
            }
        }
        if self.seats_total == 0 {
            return fail("seats_total must be positive".into());
        }
        if self.max_bargain_iters == 0 {
            return fail("max_bargain_iters must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ScenarioConfig::default();
        cfg.validate().unwrap();
        let back = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(cfg, back);
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let cfg = ScenarioConfig::from_toml_str("scenario = \"case2\"\nwillingness = 0.5\nfleet_size = 20\n").unwrap();
        assert_eq!(cfg.scenario, Scenario::Case2);
        assert_eq!(cfg.willingness, 0.5);
        assert_eq!(cfg.fleet_size, 20);
        assert_eq!(cfg.battery_capacity, 50.0);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_boxes() {
        assert!(ScenarioConfig::from_toml_str("no_such_key = 1").is_err());
        assert!(ScenarioConfig::from_toml_str("r_min = 3.0\nr_max = 1.0").is_err());
        assert!(ScenarioConfig::from_toml_str("hop_cost = -1.0").is_err());
    }

    #[test]
    fn derived_boxes() {
        let cfg = ScenarioConfig::default();
        assert_eq!(cfg.ride_box(), Interval::new(-2.0, 2.0));
        let l = cfg.charge_box();
        assert_eq!(l.lo, 0.0);
        assert!((l.hi - 2.4).abs() < 1e-12);
        assert!((cfg.sum_box(50.0).hi - 5.0).abs() < 1e-12);
        assert!((cfg.charge_power_kw() - 12.0).abs() < 1e-12);
    }

    #[test]
    fn hourly_price_schedule() {
        let cfg = ScenarioConfig { c_rer_hourly: Some(vec![0.1, 0.2, 0.3]), ..ScenarioConfig::default() };
        assert_eq!(cfg.c_rer_at(0), 0.1);
        assert_eq!(cfg.c_rer_at(61), 0.2);
        assert_eq!(cfg.c_rer_at(1000), 0.3);
    }
}
