//! Straight-through synthetic demand on the 3×3 grid.

use super::{expand_flows, FlowError, FlowSpec, SpawnEvent};
use crate::netmodel::{Compass, MovementId, RoadId, RoadNetwork, Turn};

/// Episode length the synthetic sets are defined over.
pub const SYN_HORIZON: f64 = 3600.0;

const PERIOD: f64 = 900.0;

fn check_shape(net: &RoadNetwork) -> Result<(), FlowError> {
    match net.grid {
        Some(g) if g.rows == 3 && g.cols == 3 && net.intersections.len() == 9 => Ok(()),
        Some(g) => Err(FlowError::GridShape(format!("{}x{}", g.rows, g.cols))),
        None => Err(FlowError::GridShape("a non-grid network".into())),
    }
}

/// Movements that carry a vehicle straight across the network from `entry`.
pub fn straight_route(net: &RoadNetwork, entry: RoadId) -> Vec<MovementId> {
    let mut route = Vec::new();
    let mut lane = net.road(entry).lanes[Turn::Straight.index()];
    while let Some(m) = net.movement_from_lane(lane) {
        route.push(m);
        lane = net.movement(m).out_lane;
    }
    route
}

/// Entry roads grouped W, E, N, S, each in network order.
fn entries_by_side(net: &RoadNetwork) -> Vec<(Compass, RoadId)> {
    let entries = net.entry_roads();
    Compass::ALL
        .into_iter()
        .flat_map(|side| {
            entries
                .iter()
                .filter(move |(_, s)| *s == side)
                .map(move |(r, _)| (side, *r))
        })
        .collect()
}

fn flow(net: &RoadNetwork, entry: RoadId, start: f64, end: f64, interval: f64) -> FlowSpec {
    FlowSpec {
        route: straight_route(net, entry),
        start,
        end,
        interval,
        vehicle: None,
    }
}

/// Twelve straight flows, one vehicle every 20 s from t = 0.
pub fn syn_light_flows(net: &RoadNetwork) -> Result<Vec<FlowSpec>, FlowError> {
    check_shape(net)?;
    Ok(entries_by_side(net)
        .into_iter()
        .map(|(_, entry)| flow(net, entry, 0.0, SYN_HORIZON - 1.0, 20.0))
        .collect())
}

/// Four 900 s periods: all flows at 10 s; N/S-bound at 2 s (W/E at 10 s); all
/// at 10 s; W/E-bound at 2 s (N/S at 10 s).
pub fn syn_heavy_flows(net: &RoadNetwork) -> Result<Vec<FlowSpec>, FlowError> {
    check_shape(net)?;
    let mut flows = Vec::new();
    for p in 0..4 {
        let start = p as f64 * PERIOD;
        let end = start + PERIOD - 1.0;
        for (side, entry) in entries_by_side(net) {
            let vertical = matches!(side, Compass::North | Compass::South);
            let rush = (p == 1 && vertical) || (p == 3 && !vertical);
            let interval = if rush { 2.0 } else { 10.0 };
            flows.push(flow(net, entry, start, end, interval));
        }
    }
    Ok(flows)
}

pub fn gen_syn_light(net: &RoadNetwork) -> Result<Vec<SpawnEvent>, FlowError> {
    Ok(expand_flows(&syn_light_flows(net)?, net))
}

pub fn gen_syn_heavy(net: &RoadNetwork) -> Result<Vec<SpawnEvent>, FlowError> {
    Ok(expand_flows(&syn_heavy_flows(net)?, net))
}
