//! Traffic demand: synthetic generators, flow-file loading and arrival
//! statistics.

mod file;
mod stats;
mod synthetic;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netmodel::{LaneId, MovementId, RoadNetwork};
use crate::signalmath::KinematicParams;

pub use file::{flow_records, load_flow_file, parse_flow_json, write_flow_file, FlowRecord, VehicleDoc};
pub use stats::{arrival_interval_stats, write_interval_csv, IntervalStats};
pub use synthetic::{gen_syn_heavy, gen_syn_light, straight_route, syn_heavy_flows, syn_light_flows, SYN_HORIZON};

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("synthetic demand needs a 3x3 grid, got {0}")]
    GridShape(String),
    #[error("flow record {index}: unknown road id `{road}`")]
    UnknownRoad { index: usize, road: String },
    #[error("flow record {index}: {reason}")]
    Route { index: usize, reason: String },
    #[error("flow record {index}: malformed: {reason}")]
    Malformed { index: usize, reason: String },
    #[error("flow file is not a JSON array of records: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// One vehicle scheduled to enter the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpawnEvent {
    /// Scheduled entry time t_e, seconds.
    pub time: f64,
    pub entry_lane: LaneId,
    /// Movements to take, first to last; the last one lands on an exit lane.
    pub route: Vec<MovementId>,
    /// Per-vehicle kinematics when they differ from the simulation default.
    pub vehicle: Option<KinematicParams>,
}

/// A stream of identical vehicles entering every `interval` seconds over
/// `[start, end]` (both inclusive).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSpec {
    pub route: Vec<MovementId>,
    pub start: f64,
    pub end: f64,
    pub interval: f64,
    pub vehicle: Option<KinematicParams>,
}

impl FlowSpec {
    pub fn entry_lane(&self, net: &RoadNetwork) -> LaneId {
        net.movement(self.route[0]).in_lane
    }

    pub fn departure_times(&self) -> impl Iterator<Item = f64> + '_ {
        (0u64..)
            .map(move |k| self.start + k as f64 * self.interval)
            .take_while(move |&t| t <= self.end)
    }

    pub fn expand(&self, net: &RoadNetwork) -> Vec<SpawnEvent> {
        let entry_lane = self.entry_lane(net);
        self.departure_times()
            .map(|time| SpawnEvent {
                time,
                entry_lane,
                route: self.route.clone(),
                vehicle: self.vehicle,
            })
            .collect()
    }
}

/// Expands flows and orders the result by departure time; flows listed first
/// depart first on ties.
pub fn expand_flows(flows: &[FlowSpec], net: &RoadNetwork) -> Vec<SpawnEvent> {
    let mut events: Vec<SpawnEvent> = flows.iter().flat_map(|f| f.expand(net)).collect();
    events.sort_by(|a, b| a.time.total_cmp(&b.time));
    events
}

/// Groups events by route and vehicle into evenly spaced flows; expanding the
/// result reproduces the input (for time-sorted input with exact spacings).
pub fn flows_from_events(events: &[SpawnEvent]) -> Vec<FlowSpec> {
    let mut groups: Vec<(Vec<MovementId>, Option<KinematicParams>, Vec<f64>)> = Vec::new();
    for e in events {
        match groups
            .iter_mut()
            .find(|(route, vehicle, _)| *route == e.route && *vehicle == e.vehicle)
        {
            Some(g) => g.2.push(e.time),
            None => groups.push((e.route.clone(), e.vehicle, vec![e.time])),
        }
    }
    let mut flows = Vec::new();
    for (route, vehicle, times) in groups {
        let mut i = 0;
        while i < times.len() {
            let start = times[i];
            if i + 1 == times.len() {
                flows.push(FlowSpec { route: route.clone(), start, end: start, interval: 1.0, vehicle });
                break;
            }
            let interval = times[i + 1] - start;
            let mut j = i + 1;
            while j + 1 < times.len() && start + (j + 1 - i) as f64 * interval == times[j + 1] {
                j += 1;
            }
            if interval <= 0.0 || start + (j - i) as f64 * interval != times[j] {
                flows.push(FlowSpec { route: route.clone(), start, end: start, interval: 1.0, vehicle });
                i += 1;
                continue;
            }
            flows.push(FlowSpec {
                route: route.clone(),
                start,
                end: times[j],
                interval,
                vehicle,
            });
            i = j + 1;
        }
    }
    flows
}
