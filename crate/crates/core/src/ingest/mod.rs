//! Loading of ride requests, PV profiles, graphs and configuration.

mod pv;
mod tlc;

use std::path::Path;

pub use pv::{builtin_pv, load_pv_csv, PV_END_MINUTE, PV_START_MINUTE};
pub use tlc::{load_tlc, RegionMap, TlcLoad};

use crate::error::{Error, Result};
use crate::model::{CityGraph, ScenarioConfig};
use crate::sim::SimInputs;
use crate::synth;

pub fn load_config(path: impl AsRef<Path>) -> Result<ScenarioConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
    ScenarioConfig::from_toml_str(&text).map_err(|e| Error::load(path, e.to_string()))
}

pub fn load_graph(cfg: &ScenarioConfig) -> Result<CityGraph> {
    match &cfg.graph_path {
        Some(path) => CityGraph::load(path),
        None => Ok(CityGraph::default_manhattan()),
    }
}

/// Graph, PV and requests for one day. Without a TLC file the requests are
/// generated; either way they depend on `cfg.seed`.
pub fn load_inputs(cfg: &ScenarioConfig) -> Result<SimInputs> {
    let graph = load_graph(cfg)?;
    let pv = match &cfg.pv_path {
        Some(path) => load_pv_csv(path, graph.facilities())?,
        None => builtin_pv(cfg.weather, &graph, cfg),
    };
    let requests = match &cfg.tlc_path {
        Some(path) => {
            let map = match &cfg.region_map_path {
                Some(p) => RegionMap::load(p)?,
                None => RegionMap::default_lower_manhattan(),
            };
            map.check_against(&graph)?;
            let date = cfg
                .tlc_date
                .as_deref()
                .map(|d| chrono::NaiveDate::parse_from_str(d, "%Y-%m-%d"))
                .transpose()
                .map_err(|e| Error::Config(format!("tlc_date: {e}")))?;
            load_tlc(path, &map, cfg.sample_size, cfg.seed, date)?.requests
        }
        None => synth::diurnal_requests(cfg.synthetic_requests, &graph, cfg.seed),
    };
    Ok(SimInputs { graph, pv, requests })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_graph_file_matches_the_builtin() {
        let g = CityGraph::parse_edge_list(include_str!("../../data/manhattan.graph")).unwrap();
        let d = CityGraph::default_manhattan();
        assert_eq!(g.edges(), d.edges());
        assert_eq!(g.facilities(), d.facilities());
        assert_eq!(g.minutes_per_hop(), d.minutes_per_hop());
    }

    #[test]
    fn missing_files_are_load_errors() {
        let cfg = ScenarioConfig { graph_path: Some("/nonexistent/g.txt".into()), ..ScenarioConfig::default() };
        assert!(matches!(load_inputs(&cfg), Err(Error::Load { .. })));
        assert!(matches!(load_config("/nonexistent/cfg.toml"), Err(Error::Load { .. })));
    }

    #[test]
    fn synthetic_inputs_by_default() {
        let cfg = ScenarioConfig::desk_scale();
        let inp = load_inputs(&cfg).unwrap();
        assert_eq!(inp.requests.len(), 500);
        assert_eq!(inp.pv.facilities, vec![3, 5, 8, 9]);
    }
}
