use std::f64::consts::PI;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{CityGraph, NodeId, PvProfile, ScenarioConfig, Weather, DAY_MINUTES};

/// Sunrise in the builtin profiles (7:00).
pub const PV_START_MINUTE: u32 = 60;
/// Sunset (18:00).
pub const PV_END_MINUTE: u32 = 720;

/// Fraction of output lost at the bottom of a cloud dip.
const CLOUD_DEPTH: f64 = 0.7;
const MORNING_CLOUDS: (u32, u32) = (120, 420);
const AFTERNOON_CLOUDS: (u32, u32) = (420, 720);

fn sin2_bump(minute: u32, (start, end): (u32, u32)) -> f64 {
    if minute <= start || minute >= end {
        return 0.0;
    }
    let x = f64::from(minute - start) / f64::from(end - start);
    (PI * x).sin().powi(2)
}

/// Clear-sky shape: zero before sunrise, one at 12:30.
pub(crate) fn clear_sky(minute: u32) -> f64 {
    sin2_bump(minute, (PV_START_MINUTE, PV_END_MINUTE))
}

fn attenuation(weather: Weather, minute: u32) -> f64 {
    match weather {
        Weather::Sunny => 1.0,
        Weather::CloudyMorning => 1.0 - CLOUD_DEPTH * sin2_bump(minute, MORNING_CLOUDS),
        Weather::CloudyAfternoon => 1.0 - CLOUD_DEPTH * sin2_bump(minute, AFTERNOON_CLOUDS),
    }
}

/// Builtin profile: each facility peaks at `station_peak_kw` times its
/// station count.
pub fn builtin_pv(weather: Weather, graph: &CityGraph, cfg: &ScenarioConfig) -> PvProfile {
    let facilities = graph.facilities().to_vec();
    let series = facilities
        .iter()
        .map(|&s| {
            let peak = cfg.station_peak_kw * f64::from(cfg.stations_at(s));
            (0..DAY_MINUTES).map(|t| peak * clear_sky(t) * attenuation(weather, t)).collect()
        })
        .collect();
    PvProfile { weather: Some(weather), facilities, series }
}

#[derive(Deserialize)]
struct PvRow {
    minute: u32,
    facility: NodeId,
    kw: f64,
}

/// Reads `minute,facility,kw` rows. Minutes without a row are dark.
pub fn load_pv_csv(path: impl AsRef<Path>, facilities: &[NodeId]) -> Result<PvProfile> {
    let path = path.as_ref();
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
    let mut profile = PvProfile::dark(facilities, DAY_MINUTES as usize);
    for (line, row) in reader.deserialize::<PvRow>().enumerate() {
        let row = row.map_err(|e| Error::load(path, e.to_string()))?;
        let at = |msg: String| Error::load(path, format!("row {}: {msg}", line + 2));
        if !(row.kw >= 0.0 && row.kw.is_finite()) {
            return Err(at(format!("power must be non-negative, got {}", row.kw)));
        }
        if row.minute >= DAY_MINUTES {
            return Err(at(format!("minute {} is outside the day", row.minute)));
        }
        let f = facilities
            .iter()
            .position(|&s| s == row.facility)
            .ok_or_else(|| at(format!("node {} is not a facility", row.facility)))?;
        profile.series[f][row.minute as usize] = row.kw;
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn sunny() -> (PvProfile, ScenarioConfig) {
        let cfg = ScenarioConfig::default();
        (builtin_pv(Weather::Sunny, &CityGraph::default_manhattan(), &cfg), cfg)
    }

    #[test]
    fn peaks_scale_with_station_count() {
        let (pv, _) = sunny();
        assert!((pv.power(3, 390) - 50.0).abs() < 1e-12);
        assert!((pv.power(5, 390) - 75.0).abs() < 1e-12);
        assert_eq!(pv.peak(9), 75.0);
    }

    #[test]
    fn dark_at_dawn_and_night() {
        for weather in Weather::ALL {
            let pv = builtin_pv(weather, &CityGraph::default_manhattan(), &ScenarioConfig::default());
            assert_eq!(pv.total_kw(0), 0.0);
            assert_eq!(pv.total_kw(DAY_MINUTES - 1), 0.0);
        }
    }

    #[test]
    fn clouds_only_remove_power() {
        let (sun, cfg) = sunny();
        let g = CityGraph::default_manhattan();
        for weather in [Weather::CloudyMorning, Weather::CloudyAfternoon] {
            let cloudy = builtin_pv(weather, &g, &cfg);
            for t in 0..DAY_MINUTES {
                assert!(cloudy.total_kw(t) <= sun.total_kw(t));
            }
        }
        let morning = builtin_pv(Weather::CloudyMorning, &g, &cfg);
        assert!(morning.total_kw(270) < 0.5 * sun.total_kw(270));
        assert_eq!(morning.total_kw(600), sun.total_kw(600));
    }

    #[test]
    fn csv_round_trip_and_negative_power() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "minute,facility,kw\n100,3,12.5\n101, 9 ,4").unwrap();
        let pv = load_pv_csv(f.path(), &[3, 5, 8, 9]).unwrap();
        assert_eq!(pv.power(3, 100), 12.5);
        assert_eq!(pv.power(9, 101), 4.0);
        assert_eq!(pv.power(5, 100), 0.0);

        let mut bad = tempfile::NamedTempFile::new().unwrap();
        writeln!(bad, "minute,facility,kw\n100,3,-1").unwrap();
        assert!(matches!(load_pv_csv(bad.path(), &[3]), Err(Error::Load { .. })));
    }
}
