use std::collections::HashMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};
use rand::seq::index;

use crate::error::{Error, Result};
use crate::model::{CityGraph, NodeId, RideRequest, DAY_MINUTES};
use crate::sim::{rng_for, stream};

const DEFAULT_REGION_MAP: &str = include_str!("../../data/region_map.csv");

/// TLC taxi zone id to graph node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    zones: HashMap<u32, NodeId>,
}

impl RegionMap {
    /// The bundled partition of lower-Manhattan zones into nine regions.
    pub fn default_lower_manhattan() -> Self {
        Self::parse(DEFAULT_REGION_MAP).expect("bundled region map parses")
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, NodeId)>) -> Self {
        RegionMap { zones: pairs.into_iter().collect() }
    }

    /// Parses `zone_id,node` CSV with a header row.
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let mut zones = HashMap::new();
        for row in reader.deserialize::<(u32, NodeId)>() {
            let (zone, node) = row?;
            if zones.insert(zone, node).is_some_and(|prev| prev != node) {
                return Err(Error::Config(format!("zone {zone} is mapped to two nodes")));
            }
        }
        Ok(RegionMap { zones })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
        Self::parse(&text).map_err(|e| Error::load(path, e.to_string()))
    }

    pub fn node(&self, zone: u32) -> Option<NodeId> {
        self.zones.get(&zone).copied()
    }

    pub fn len(&self) -> usize {
        self.zones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zones.is_empty()
    }

    pub fn check_against(&self, graph: &CityGraph) -> Result<()> {
        match self.zones.values().find(|&&v| !graph.contains(v)) {
            Some(&v) => Err(Error::UnknownNode(v)),
            None => Ok(()),
        }
    }
}

/// Result of reading a trip-record file.
#[derive(Debug, Clone)]
pub struct TlcLoad {
    /// The sample, sorted by submission minute; ids are positions.
    pub requests: Vec<RideRequest>,
    /// Rows inside the date and time window with both zones mapped.
    pub in_window: usize,
    pub outside_window: usize,
    pub unknown_zone: usize,
    pub malformed: usize,
}

struct Columns {
    pickup_time: usize,
    pickup_zone: usize,
    dropoff_zone: usize,
}

impl Columns {
    fn find(headers: &csv::StringRecord) -> Option<Self> {
        let pos = |pred: &dyn Fn(&str) -> bool| headers.iter().position(|h| pred(&h.trim().to_ascii_lowercase()));
        Some(Columns {
            pickup_time: pos(&|h| h.ends_with("pickup_datetime"))?,
            pickup_zone: pos(&|h| h == "pulocationid")?,
            dropoff_zone: pos(&|h| h == "dolocationid")?,
        })
    }
}

fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S", "%m/%d/%Y %I:%M:%S %p", "%Y-%m-%d %H:%M"]
        .iter()
        .find_map(|fmt| NaiveDateTime::parse_from_str(s, fmt).ok())
}

/// Minute of the simulated day, if the timestamp falls between 6:00 and 24:00.
fn day_minute(ts: &NaiveDateTime) -> Option<u32> {
    let since_six = (ts.hour() * 60 + ts.minute()).checked_sub(6 * 60)?;
    (since_six < DAY_MINUTES).then_some(since_six)
}

/// Reads trip records, keeps rows between 6:00 and 24:00 (on `date`, if
/// given) whose zones both map to nodes, and draws `sample_size` of them
/// uniformly without replacement.
pub fn load_tlc(
    path: impl AsRef<Path>,
    regions: &RegionMap,
    sample_size: usize,
    seed: u64,
    date: Option<NaiveDate>,
) -> Result<TlcLoad> {
    let path = path.as_ref();
    let mut reader =
        csv::ReaderBuilder::new().flexible(true).from_path(path).map_err(|e| Error::load(path, e.to_string()))?;
    let headers = reader.headers().map_err(|e| Error::load(path, e.to_string()))?.clone();
    let cols = Columns::find(&headers)
        .ok_or_else(|| Error::load(path, "expected columns *pickup_datetime, PULocationID and DOLocationID"))?;

    let mut kept: Vec<(u32, NodeId, NodeId)> = Vec::new();
    let (mut outside_window, mut unknown_zone, mut malformed) = (0, 0, 0);
    for (line, record) in reader.records().enumerate() {
        let parsed = record.ok().and_then(|r| {
            let ts = parse_timestamp(r.get(cols.pickup_time)?)?;
            let pu: u32 = r.get(cols.pickup_zone)?.trim().parse().ok()?;
            let dropoff: u32 = r.get(cols.dropoff_zone)?.trim().parse().ok()?;
            Some((ts, pu, dropoff))
        });
        let Some((ts, pu, dropoff)) = parsed else {
            log::warn!("{}: skipping malformed row {}", path.display(), line + 2);
            malformed += 1;
            continue;
        };
        let minute = match day_minute(&ts) {
            Some(t) if date.is_none_or(|d| ts.date() == d) => t,
            _ => {
                outside_window += 1;
                continue;
            }
        };
        match (regions.node(pu), regions.node(dropoff)) {
            (Some(o), Some(d)) => kept.push((minute, o, d)),
            _ => unknown_zone += 1,
        }
    }
    if unknown_zone > 0 {
        log::info!("{}: dropped {unknown_zone} rows outside the mapped regions", path.display());
    }
    if kept.is_empty() {
        return Err(Error::load(path, "no trip records inside the window and regions"));
    }

    let in_window = kept.len();
    let mut chosen: Vec<usize> = if sample_size >= in_window {
        (0..in_window).collect()
    } else {
        index::sample(&mut rng_for(seed, stream::SAMPLE), in_window, sample_size).into_vec()
    };
    chosen.sort_by_key(|&i| (kept[i].0, i));
    let requests = chosen
        .into_iter()
        .enumerate()
        .map(|(id, i)| {
            let (t, o, d) = kept[i];
            RideRequest::new(id, t, o, d)
        })
        .collect();
    Ok(TlcLoad { requests, in_window, outside_window, unknown_zone, malformed })
}
