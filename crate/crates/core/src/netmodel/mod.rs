//! Static road-network model: lanes with storage capacities, the twelve
//! traffic movements of a four-leg intersection and its four signal phases.
//!
//! Every directed road carries three lanes, one per turn (left, straight,
//! right) to be taken at the downstream intersection. Movements are indexed
//! locally as `approach * 3 + turn` with approaches ordered W, E, N, S, which
//! is also the canonical order of the incoming-lane observation.

mod assemble;
mod grid;
mod roadnet;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use grid::build_grid;
pub use roadnet::{load_roadnet, RoadnetDoc};

pub const MOVEMENTS_PER_INTERSECTION: usize = 12;
pub const PHASE_COUNT: usize = 4;
pub const LANES_PER_ROAD: usize = 3;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("invalid grid dimension: {0}")]
    InvalidDimension(String),
    #[error("lane capacity domain error: length={length}, l_v={vehicle_length}, l_g={min_gap}")]
    CapacityDomain {
        length: f64,
        vehicle_length: f64,
        min_gap: f64,
    },
    #[error("roadnet: {0}")]
    Roadnet(String),
    #[error("roadnet parse: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("network failed validation: {0:?}")]
    Invalid(Vec<Violation>),
}

macro_rules! id_type {
    ($name:ident) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub struct $name(pub usize);

        impl $name {
            pub fn index(self) -> usize {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }
    };
}

id_type!(LaneId);
id_type!(RoadId);
id_type!(IntersectionId);
id_type!(MovementId);
id_type!(NodeId);

/// Side of an intersection an approach comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compass {
    West,
    East,
    North,
    South,
}

impl Compass {
    /// Canonical approach order used by movements and observations.
    pub const ALL: [Compass; 4] = [Compass::West, Compass::East, Compass::North, Compass::South];

    pub fn index(self) -> usize {
        match self {
            Compass::West => 0,
            Compass::East => 1,
            Compass::North => 2,
            Compass::South => 3,
        }
    }

    /// Direction of travel of vehicles arriving from this side.
    pub fn travel_heading(self) -> Heading {
        match self {
            Compass::West => Heading::East,
            Compass::East => Heading::West,
            Compass::North => Heading::South,
            Compass::South => Heading::North,
        }
    }

    pub fn opposite(self) -> Compass {
        match self {
            Compass::West => Compass::East,
            Compass::East => Compass::West,
            Compass::North => Compass::South,
            Compass::South => Compass::North,
        }
    }
}

impl fmt::Display for Compass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compass::West => "W",
            Compass::East => "E",
            Compass::North => "N",
            Compass::South => "S",
        })
    }
}

/// Direction of travel along a road, numbered counter-clockwise from east.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Heading {
    East,
    North,
    West,
    South,
}

impl Heading {
    pub const ALL: [Heading; 4] = [Heading::East, Heading::North, Heading::West, Heading::South];

    pub fn index(self) -> usize {
        match self {
            Heading::East => 0,
            Heading::North => 1,
            Heading::West => 2,
            Heading::South => 3,
        }
    }

    pub fn from_index(i: usize) -> Heading {
        Heading::ALL[i % 4]
    }

    /// Side of the downstream intersection this road arrives at.
    pub fn arrival_side(self) -> Compass {
        match self {
            Heading::East => Compass::West,
            Heading::West => Compass::East,
            Heading::North => Compass::South,
            Heading::South => Compass::North,
        }
    }

    pub fn after_turn(self, turn: Turn) -> Heading {
        match turn {
            Turn::Left => Heading::from_index(self.index() + 1),
            Turn::Straight => self,
            Turn::Right => Heading::from_index(self.index() + 3),
        }
    }

    /// Turn that takes a vehicle from `self` onto `next`, if any.
    pub fn turn_to(self, next: Heading) -> Option<Turn> {
        Turn::ALL.into_iter().find(|&t| self.after_turn(t) == next)
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Heading::East | Heading::West)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Turn {
    Left,
    Straight,
    Right,
}

impl Turn {
    pub const ALL: [Turn; 3] = [Turn::Left, Turn::Straight, Turn::Right];

    pub fn index(self) -> usize {
        match self {
            Turn::Left => 0,
            Turn::Straight => 1,
            Turn::Right => 2,
        }
    }
}

impl fmt::Display for Turn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Turn::Left => "left",
            Turn::Straight => "straight",
            Turn::Right => "right",
        })
    }
}

pub fn local_movement_index(approach: Compass, turn: Turn) -> usize {
    approach.index() * LANES_PER_ROAD + turn.index()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: LaneId,
    pub road: RoadId,
    /// Turn slot on the road; also the turn taken at the downstream intersection.
    pub turn: Turn,
    pub length: f64,
    pub max_speed: f64,
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Road {
    pub id: RoadId,
    pub name: String,
    pub from: NodeId,
    pub to: NodeId,
    pub heading: Heading,
    pub length: f64,
    pub lanes: [LaneId; LANES_PER_ROAD],
}

/// Road-network node: either a signalized intersection or a virtual boundary
/// point where traffic enters or leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub intersection: Option<IntersectionId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Movement {
    pub id: MovementId,
    pub intersection: IntersectionId,
    pub approach: Compass,
    pub turn: Turn,
    pub in_lane: LaneId,
    /// Lane of the outgoing road with the same turn slot. Pressure statistics
    /// use this lane; a vehicle physically lands on the slot of its next turn.
    pub out_lane: LaneId,
    pub in_road: RoadId,
    pub out_road: RoadId,
}

impl Movement {
    pub fn local_index(&self) -> usize {
        local_movement_index(self.approach, self.turn)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Phase {
    pub id: usize,
    /// Local movement indices granted green.
    pub movements: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Intersection {
    pub id: IntersectionId,
    pub node: NodeId,
    pub name: String,
    /// (row, col) from the north-west corner, when laid out on a grid.
    pub grid_pos: Option<(usize, usize)>,
    /// Indexed by local movement index.
    pub incoming_lanes: [LaneId; MOVEMENTS_PER_INTERSECTION],
    /// Nominal out lane of each local movement.
    pub outgoing_lanes: [LaneId; MOVEMENTS_PER_INTERSECTION],
    /// Incoming road per approach (W, E, N, S).
    pub incoming_roads: [RoadId; 4],
    /// Outgoing road per heading (E, N, W, S).
    pub outgoing_roads: [RoadId; 4],
    pub movements: Vec<Movement>,
    pub phases: Vec<Phase>,
    /// Local indices of always-permitted right turns.
    pub always_green: Vec<usize>,
}

impl Intersection {
    pub fn movement(&self, approach: Compass, turn: Turn) -> &Movement {
        &self.movements[local_movement_index(approach, turn)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEntry {
    pub lane: LaneId,
    pub side: Compass,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridShape {
    pub rows: usize,
    pub cols: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNetwork {
    pub nodes: Vec<Node>,
    pub roads: Vec<Road>,
    pub lanes: Vec<Lane>,
    pub intersections: Vec<Intersection>,
    pub boundary_entries: Vec<BoundaryEntry>,
    pub boundary_exits: Vec<LaneId>,
    pub grid: Option<GridShape>,
    /// Vehicle length and minimum gap the capacities were derived from.
    pub vehicle_length: f64,
    pub min_gap: f64,
}

/// Maximum number of vehicles a lane can store, `floor(length / (l_v + l_g))`.
pub fn lane_capacity(length: f64, vehicle_length: f64, min_gap: f64) -> Result<u32, NetError> {
    let spacing = vehicle_length + min_gap;
    if !(length.is_finite() && length > 0.0 && spacing.is_finite() && spacing > 0.0)
        || vehicle_length < 0.0
        || min_gap < 0.0
    {
        return Err(NetError::CapacityDomain {
            length,
            vehicle_length,
            min_gap,
        });
    }
    let fit = (length / spacing).floor();
    if fit >= f64::from(u32::MAX) {
        return Ok(u32::MAX);
    }
    Ok(fit as u32)
}

/// Phase 0: W/E straight, 1: N/S straight, 2: W/E left, 3: N/S left.
/// Right turns are always permitted and belong to no phase.
pub fn standard_phase_table() -> Vec<Phase> {
    use Compass::*;
    use Turn::*;
    let pair = |a: Compass, b: Compass, t: Turn| [local_movement_index(a, t), local_movement_index(b, t)];
    vec![
        Phase { id: 0, movements: pair(West, East, Straight) },
        Phase { id: 1, movements: pair(North, South, Straight) },
        Phase { id: 2, movements: pair(West, East, Left) },
        Phase { id: 3, movements: pair(North, South, Left) },
    ]
}

/// Two controlled movements may share a green when they come from the same
/// approach, or from opposite approaches with the same turn.
pub fn movements_compatible(a: &Movement, b: &Movement) -> bool {
    a.approach == b.approach || (a.approach == b.approach.opposite() && a.turn == b.turn)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    DanglingLane { intersection: IntersectionId, movement: usize, lane: LaneId },
    SelfLoopMovement { intersection: IntersectionId, movement: usize },
    DuplicateMovement { intersection: IntersectionId, movement: usize },
    MovementIndex { intersection: IntersectionId, position: usize },
    MovementCount { intersection: IntersectionId, count: usize },
    PhaseCount { intersection: IntersectionId, count: usize },
    PhaseMovement { intersection: IntersectionId, phase: usize, movement: usize },
    PhaseConflict { intersection: IntersectionId, phase: usize },
    PhaseCoverage { intersection: IntersectionId, movement: usize, times: usize },
    AlwaysGreen { intersection: IntersectionId },
    LaneGeometry { lane: LaneId },
    LaneCapacity { lane: LaneId, expected: u32, actual: u32 },
    LaneUsage { lane: LaneId, as_in: usize, as_out: usize },
    BoundaryLane { lane: LaneId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DanglingLane { intersection, movement, lane } => write!(
                f,
                "dangling lane reference: intersection {intersection} movement {movement} lane {lane}"
            ),
            Violation::SelfLoopMovement { intersection, movement } => {
                write!(f, "movement in_lane equals out_lane: intersection {intersection} movement {movement}")
            }
            Violation::DuplicateMovement { intersection, movement } => {
                write!(f, "duplicate (in_lane, turn): intersection {intersection} movement {movement}")
            }
            Violation::MovementIndex { intersection, position } => {
                write!(f, "movement out of canonical order: intersection {intersection} position {position}")
            }
            Violation::MovementCount { intersection, count } => {
                write!(f, "movement count ≠ 12: intersection {intersection} has {count}")
            }
            Violation::PhaseCount { intersection, count } => {
                write!(f, "phase count ≠ 4: intersection {intersection} has {count}")
            }
            Violation::PhaseMovement { intersection, phase, movement } => write!(
                f,
                "phase holds an invalid or right-turn movement: intersection {intersection} phase {phase} movement {movement}"
            ),
            Violation::PhaseConflict { intersection, phase } => {
                write!(f, "conflicting movements in phase: intersection {intersection} phase {phase}")
            }
            Violation::PhaseCoverage { intersection, movement, times } => write!(
                f,
                "phases do not partition movements: intersection {intersection} movement {movement} covered {times} times"
            ),
            Violation::AlwaysGreen { intersection } => {
                write!(f, "always-green set is not the four right turns: intersection {intersection}")
            }
            Violation::LaneGeometry { lane } => write!(f, "lane {lane} has non-positive length or speed"),
            Violation::LaneCapacity { lane, expected, actual } => {
                write!(f, "lane {lane} capacity {actual}, expected {expected}")
            }
            Violation::LaneUsage { lane, as_in, as_out } => write!(
                f,
                "lane {lane} used as in_lane {as_in} times and out_lane {as_out} times"
            ),
            Violation::BoundaryLane { lane } => write!(f, "boundary list references bad lane {lane}"),
        }
    }
}

impl RoadNetwork {
    pub fn lane(&self, id: LaneId) -> &Lane {
        &self.lanes[id.0]
    }

    pub fn road(&self, id: RoadId) -> &Road {
        &self.roads[id.0]
    }

    pub fn intersection(&self, id: IntersectionId) -> &Intersection {
        &self.intersections[id.0]
    }

    pub fn movement(&self, id: MovementId) -> &Movement {
        &self.intersections[id.0 / MOVEMENTS_PER_INTERSECTION].movements[id.0 % MOVEMENTS_PER_INTERSECTION]
    }

    pub fn movement_count(&self) -> usize {
        self.intersections.len() * MOVEMENTS_PER_INTERSECTION
    }

    pub fn road_by_name(&self, name: &str) -> Option<&Road> {
        self.roads.iter().find(|r| r.name == name)
    }

    /// Road names indexed for repeated lookups.
    pub fn road_index(&self) -> HashMap<&str, RoadId> {
        self.roads.iter().map(|r| (r.name.as_str(), r.id)).collect()
    }

    /// Roads entering the network from a boundary node, with the side they enter.
    pub fn entry_roads(&self) -> Vec<(RoadId, Compass)> {
        let mut out: Vec<(RoadId, Compass)> = Vec::new();
        for entry in &self.boundary_entries {
            let road = self.lane(entry.lane).road;
            if !out.iter().any(|(r, _)| *r == road) {
                out.push((road, entry.side));
            }
        }
        out
    }

    pub fn is_exit_lane(&self, lane: LaneId) -> bool {
        let road = self.road(self.lane(lane).road);
        self.nodes[road.to.0].intersection.is_none()
    }

    /// Intersection a lane feeds, if it is not an exit lane.
    pub fn downstream_intersection(&self, lane: LaneId) -> Option<IntersectionId> {
        let road = self.road(self.lane(lane).road);
        self.nodes[road.to.0].intersection
    }

    /// Movement a vehicle standing on `lane` will take next, if any.
    pub fn movement_from_lane(&self, lane: LaneId) -> Option<MovementId> {
        let l = self.lane(lane);
        let road = self.road(l.road);
        let inter = self.intersection(self.nodes[road.to.0].intersection?);
        let m = &inter.movements[local_movement_index(road.heading.arrival_side(), l.turn)];
        Some(m.id)
    }

    /// Movement that carries traffic from `in_road` onto `out_road`.
    pub fn movement_between(&self, in_road: RoadId, out_road: RoadId) -> Option<MovementId> {
        let a = self.road(in_road);
        let b = self.road(out_road);
        if a.to != b.from {
            return None;
        }
        let inter = self.intersection(self.nodes[a.to.0].intersection?);
        let turn = a.heading.turn_to(b.heading)?;
        let m = &inter.movements[local_movement_index(a.heading.arrival_side(), turn)];
        (m.out_road == out_road).then_some(m.id)
    }

    /// Checks every structural invariant and returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut out = Vec::new();
        let lane_ok = |l: LaneId| l.0 < self.lanes.len();

        for lane in &self.lanes {
            if !(lane.length > 0.0 && lane.max_speed > 0.0) {
                out.push(Violation::LaneGeometry { lane: lane.id });
                continue;
            }
            match lane_capacity(lane.length, self.vehicle_length, self.min_gap) {
                Ok(expected) if expected == lane.capacity && expected >= 1 => {}
                Ok(expected) => out.push(Violation::LaneCapacity {
                    lane: lane.id,
                    expected,
                    actual: lane.capacity,
                }),
                Err(_) => out.push(Violation::LaneGeometry { lane: lane.id }),
            }
        }

        let mut as_in = vec![0usize; self.lanes.len()];
        let mut as_out = vec![0usize; self.lanes.len()];

        for inter in &self.intersections {
            let iid = inter.id;
            if inter.movements.len() != MOVEMENTS_PER_INTERSECTION {
                out.push(Violation::MovementCount {
                    intersection: iid,
                    count: inter.movements.len(),
                });
            }
            for (pos, m) in inter.movements.iter().enumerate() {
                if m.local_index() != pos {
                    out.push(Violation::MovementIndex { intersection: iid, position: pos });
                }
                for lane in [m.in_lane, m.out_lane] {
                    if !lane_ok(lane) {
                        out.push(Violation::DanglingLane { intersection: iid, movement: pos, lane });
                    }
                }
                if m.in_lane == m.out_lane {
                    out.push(Violation::SelfLoopMovement { intersection: iid, movement: pos });
                }
                if inter.movements[..pos]
                    .iter()
                    .any(|o| o.in_lane == m.in_lane && o.turn == m.turn)
                {
                    out.push(Violation::DuplicateMovement { intersection: iid, movement: pos });
                }
                if lane_ok(m.in_lane) {
                    as_in[m.in_lane.0] += 1;
                }
                if lane_ok(m.out_lane) {
                    as_out[m.out_lane.0] += 1;
                }
            }

            if inter.phases.len() != PHASE_COUNT {
                out.push(Violation::PhaseCount {
                    intersection: iid,
                    count: inter.phases.len(),
                });
            }
            let mut coverage = vec![0usize; inter.movements.len()];
            for phase in &inter.phases {
                let mut members = Vec::new();
                for &m in &phase.movements {
                    match inter.movements.get(m) {
                        Some(mv) if mv.turn != Turn::Right => {
                            coverage[m] += 1;
                            members.push(mv);
                        }
                        _ => out.push(Violation::PhaseMovement {
                            intersection: iid,
                            phase: phase.id,
                            movement: m,
                        }),
                    }
                }
                if members.len() == 2
                    && (phase.movements[0] == phase.movements[1]
                        || !movements_compatible(members[0], members[1]))
                {
                    out.push(Violation::PhaseConflict { intersection: iid, phase: phase.id });
                }
            }
            for (m, mv) in inter.movements.iter().enumerate() {
                if mv.turn != Turn::Right && coverage[m] != 1 {
                    out.push(Violation::PhaseCoverage {
                        intersection: iid,
                        movement: m,
                        times: coverage[m],
                    });
                }
            }

            let mut rights: Vec<usize> = inter
                .movements
                .iter()
                .enumerate()
                .filter(|(_, m)| m.turn == Turn::Right)
                .map(|(i, _)| i)
                .collect();
            let mut green = inter.always_green.clone();
            rights.sort_unstable();
            green.sort_unstable();
            if rights.len() != 4 || rights != green {
                out.push(Violation::AlwaysGreen { intersection: iid });
            }
        }

        for entry in &self.boundary_entries {
            if !lane_ok(entry.lane) || as_out[entry.lane.0] != 0 {
                out.push(Violation::BoundaryLane { lane: entry.lane });
            }
        }
        for &exit in &self.boundary_exits {
            if !lane_ok(exit) || as_in[exit.0] != 0 {
                out.push(Violation::BoundaryLane { lane: exit });
            }
        }

        // each lane is fed by exactly one movement unless it is an entry lane,
        // and drained by exactly one unless it is an exit lane
        let entries: Vec<LaneId> = self.boundary_entries.iter().map(|e| e.lane).collect();
        for lane in &self.lanes {
            let is_entry = entries.contains(&lane.id);
            let is_exit = self.boundary_exits.contains(&lane.id);
            let want_in = usize::from(!is_exit);
            let want_out = usize::from(!is_entry);
            if as_in[lane.id.0] != want_in || as_out[lane.id.0] != want_out {
                out.push(Violation::LaneUsage {
                    lane: lane.id,
                    as_in: as_in[lane.id.0],
                    as_out: as_out[lane.id.0],
                });
            }
        }

        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}
