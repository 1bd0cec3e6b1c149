use serde::{Deserialize, Serialize};

use super::{Scenario, Weather};

/// Outcome of one simulated day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub scenario: Scenario,
    pub weather: Weather,
    pub willingness: f64,
    pub seed: u64,
    pub received_rides: usize,
    pub completed_rides: usize,
    pub missed_rides: usize,
    /// Pending or in service when the day ended.
    pub open_rides: usize,
    /// Fraction of received rides that were not missed.
    pub qos: f64,
    pub pv_available_kwh: f64,
    pub pv_used_kwh: f64,
    /// Fraction of renewable energy left unused; 0 when `pl_defined` is false.
    pub pl: f64,
    /// False when no renewable energy was available or the fleet has no
    /// batteries.
    pub pl_defined: bool,
    pub driving_minutes: u64,
    /// Charging time, with a partial final minute counted fractionally.
    pub charging_minutes: f64,
    pub charged_energy_kwh: f64,
    /// Charging energy delivered in minutes when the facility had PV output.
    pub charged_energy_in_pv_kwh: f64,
    pub initial_soc_total_kwh: f64,
    pub final_soc_total_kwh: f64,
    pub bargain_epochs: usize,
    pub bargain_converged: usize,
    pub bargain_iterations: usize,
}

impl Metrics {
    pub fn qos_of(received: usize, missed: usize) -> f64 {
        if received == 0 {
            1.0
        } else {
            1.0 - missed as f64 / received as f64
        }
    }

    /// Unused share of available renewable energy; `None` when nothing was
    /// available.
    pub fn pl_of(available_kwh: f64, used_kwh: f64) -> Option<f64> {
        (available_kwh > 0.0).then(|| (1.0 - used_kwh / available_kwh).clamp(0.0, 1.0))
    }

    pub fn pv_share_of_charging(&self) -> Option<f64> {
        (self.charged_energy_kwh > 0.0).then(|| self.charged_energy_in_pv_kwh / self.charged_energy_kwh)
    }
}

/// One minute of the fleet time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub minute: u32,
    pub idle: usize,
    pub to_pickup: usize,
    pub riding: usize,
    pub to_charger: usize,
    pub charging: usize,
    pub soc_low: usize,
    pub soc_mid: usize,
    pub soc_high: usize,
    /// PV output per facility (kW), in facility order.
    pub pv_kw: Vec<f64>,
    /// Charging draw per facility (kW), in facility order.
    pub charging_kw: Vec<f64>,
    pub ride_incentives: f64,
    pub charge_incentives: f64,
    pub cumulative_missed: usize,
    pub pending_rides: usize,
    pub charge_requests: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qos_arithmetic() {
        assert!((Metrics::qos_of(100, 5) - 0.95).abs() < 1e-15);
        assert_eq!(Metrics::qos_of(0, 0), 1.0);
    }

    #[test]
    fn pl_undefined_without_pv() {
        assert_eq!(Metrics::pl_of(0.0, 0.0), None);
        assert_eq!(Metrics::pl_of(100.0, 25.0), Some(0.75));
    }
}
