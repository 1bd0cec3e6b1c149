use serde::{Deserialize, Serialize};

use super::{NodeId, Weather};

/// Per-facility PV output in kW for every minute of the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvProfile {
    pub weather: Option<Weather>,
    pub facilities: Vec<NodeId>,
    /// `series[f][t]`: output of `facilities[f]` at minute `t`.
    pub series: Vec<Vec<f64>>,
}

impl PvProfile {
    /// All-zero profile.
    pub fn dark(facilities: &[NodeId], minutes: usize) -> Self {
        PvProfile { weather: None, facilities: facilities.to_vec(), series: vec![vec![0.0; minutes]; facilities.len()] }
    }

    fn index_of(&self, facility: NodeId) -> Option<usize> {
        self.facilities.iter().position(|&s| s == facility)
    }

    /// Output at `facility` during `minute`; zero outside the profile.
    pub fn power(&self, facility: NodeId, minute: u32) -> f64 {
        self.index_of(facility).and_then(|f| self.series[f].get(minute as usize).copied()).unwrap_or(0.0)
    }

    pub fn peak(&self, facility: NodeId) -> f64 {
        self.index_of(facility).map(|f| self.series[f].iter().copied().fold(0.0, f64::max)).unwrap_or(0.0)
    }

    pub fn total_kw(&self, minute: u32) -> f64 {
        self.facilities.iter().map(|&s| self.power(s, minute)).sum()
    }

    pub fn minutes(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }
}
