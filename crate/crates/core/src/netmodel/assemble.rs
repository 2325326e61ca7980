use super::*;

pub(crate) struct NodeSpec {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub is_virtual: bool,
    pub grid_pos: Option<(usize, usize)>,
}

pub(crate) struct RoadSpec {
    pub name: String,
    pub from: usize,
    pub to: usize,
    pub heading: Heading,
    pub length: f64,
    pub max_speed: f64,
}

/// Builds the network from node and road descriptions. Signalized nodes keep
/// their relative order; each must have exactly one incoming and one outgoing
/// road per heading.
pub(crate) fn assemble(
    node_specs: Vec<NodeSpec>,
    road_specs: Vec<RoadSpec>,
    vehicle_length: f64,
    min_gap: f64,
    grid: Option<GridShape>,
) -> Result<RoadNetwork, NetError> {
    let mut nodes = Vec::with_capacity(node_specs.len());
    let mut real = Vec::new();
    for (i, spec) in node_specs.iter().enumerate() {
        let intersection = if spec.is_virtual {
            None
        } else {
            real.push(i);
            Some(IntersectionId(real.len() - 1))
        };
        nodes.push(Node {
            id: NodeId(i),
            name: spec.name.clone(),
            x: spec.x,
            y: spec.y,
            intersection,
        });
    }

    let mut roads = Vec::with_capacity(road_specs.len());
    let mut lanes = Vec::with_capacity(road_specs.len() * LANES_PER_ROAD);
    for (k, spec) in road_specs.iter().enumerate() {
        if spec.from >= nodes.len() || spec.to >= nodes.len() {
            return Err(NetError::Roadnet(format!("road {} references a missing node", spec.name)));
        }
        if !(spec.max_speed.is_finite() && spec.max_speed > 0.0) {
            return Err(NetError::Roadnet(format!("road {} has non-positive max speed", spec.name)));
        }
        let capacity = lane_capacity(spec.length, vehicle_length, min_gap)?;
        if capacity == 0 {
            return Err(NetError::Roadnet(format!(
                "road {} is too short to hold a single vehicle",
                spec.name
            )));
        }
        let lane_ids = [0, 1, 2].map(|j| LaneId(k * LANES_PER_ROAD + j));
        for (j, turn) in Turn::ALL.into_iter().enumerate() {
            lanes.push(Lane {
                id: lane_ids[j],
                road: RoadId(k),
                turn,
                length: spec.length,
                max_speed: spec.max_speed,
                capacity,
            });
        }
        roads.push(Road {
            id: RoadId(k),
            name: spec.name.clone(),
            from: NodeId(spec.from),
            to: NodeId(spec.to),
            heading: spec.heading,
            length: spec.length,
            lanes: lane_ids,
        });
    }

    let phases = standard_phase_table();
    let mut intersections = Vec::with_capacity(real.len());
    for (idx, &node) in real.iter().enumerate() {
        let iid = IntersectionId(idx);
        let name = &node_specs[node].name;
        let pick = |want_in: bool, heading: Heading| -> Result<RoadId, NetError> {
            let mut found = roads.iter().filter(|r| {
                r.heading == heading && if want_in { r.to.0 == node } else { r.from.0 == node }
            });
            let first = found.next();
            match (first, found.next()) {
                (Some(r), None) => Ok(r.id),
                (None, _) => Err(NetError::Roadnet(format!(
                    "intersection {name} has no {} road heading {heading:?}",
                    if want_in { "incoming" } else { "outgoing" }
                ))),
                (Some(_), Some(_)) => Err(NetError::Roadnet(format!(
                    "intersection {name} has several {} roads heading {heading:?}",
                    if want_in { "incoming" } else { "outgoing" }
                ))),
            }
        };

        let mut incoming_roads = [RoadId(0); 4];
        for side in Compass::ALL {
            incoming_roads[side.index()] = pick(true, side.travel_heading())?;
        }
        let mut outgoing_roads = [RoadId(0); 4];
        for heading in Heading::ALL {
            outgoing_roads[heading.index()] = pick(false, heading)?;
        }

        let mut movements = Vec::with_capacity(MOVEMENTS_PER_INTERSECTION);
        for side in Compass::ALL {
            let in_road = incoming_roads[side.index()];
            for turn in Turn::ALL {
                let out_road = outgoing_roads[side.travel_heading().after_turn(turn).index()];
                movements.push(Movement {
                    id: MovementId(idx * MOVEMENTS_PER_INTERSECTION + local_movement_index(side, turn)),
                    intersection: iid,
                    approach: side,
                    turn,
                    in_lane: roads[in_road.0].lanes[turn.index()],
                    out_lane: roads[out_road.0].lanes[turn.index()],
                    in_road,
                    out_road,
                });
            }
        }
        let incoming_lanes: [LaneId; MOVEMENTS_PER_INTERSECTION] = std::array::from_fn(|i| movements[i].in_lane);
        let outgoing_lanes: [LaneId; MOVEMENTS_PER_INTERSECTION] = std::array::from_fn(|i| movements[i].out_lane);
        let always_green = movements
            .iter()
            .filter(|m| m.turn == Turn::Right)
            .map(|m| m.local_index())
            .collect();

        intersections.push(Intersection {
            id: iid,
            node: NodeId(node),
            name: name.clone(),
            grid_pos: node_specs[node].grid_pos,
            incoming_lanes,
            outgoing_lanes,
            incoming_roads,
            outgoing_roads,
            movements,
            phases: phases.clone(),
            always_green,
        });
    }

    let mut boundary_entries = Vec::new();
    let mut boundary_exits = Vec::new();
    for road in &roads {
        let from_virtual = nodes[road.from.0].intersection.is_none();
        let to_virtual = nodes[road.to.0].intersection.is_none();
        if from_virtual && to_virtual {
            return Err(NetError::Roadnet(format!(
                "road {} connects two boundary nodes",
                road.name
            )));
        }
        if from_virtual {
            for &lane in &road.lanes {
                boundary_entries.push(BoundaryEntry {
                    lane,
                    side: road.heading.arrival_side(),
                });
            }
        }
        if to_virtual {
            boundary_exits.extend(road.lanes);
        }
    }

    Ok(RoadNetwork {
        nodes,
        roads,
        lanes,
        intersections,
        boundary_entries,
        boundary_exits,
        grid,
        vehicle_length,
        min_gap,
    })
}
