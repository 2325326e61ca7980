//! Discrete-time mesoscopic simulator.
//!
//! Vehicles travel along lanes at up to their free speed, stop at the tail of
//! the stop-line queue, and cross an intersection from the head of the queue
//! while their movement is green. Crossings follow the platoon discharge law
//! of [`crate::signalmath::platoon_discharged_by`] measured from the moment
//! the platoon starts, and only happen when the lane the vehicle lands on has
//! spare storage. One call to [`World::step`] advances one second.

mod signal;
mod telemetry;

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::flows::SpawnEvent;
use crate::netmodel::{
    IntersectionId, LaneId, MovementId, RoadNetwork, Turn, Violation, MOVEMENTS_PER_INTERSECTION, PHASE_COUNT,
};
use crate::signalmath::{platoon_discharged_by, KinematicParams, MovementCounts};

pub use signal::{SignalMode, SignalState, DEFAULT_YELLOW};
pub use telemetry::{read_telemetry, write_telemetry, TelemetryRecorder, TelemetryRow, TELEMETRY_HEADER};

pub const OBSERVATION_WIDTH: usize = MOVEMENTS_PER_INTERSECTION + PHASE_COUNT;

pub type Observation = [f64; OBSERVATION_WIDTH];

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("the simulator only advances in 1 s ticks, got dt = {0}")]
    TickNotOne(f64),
    #[error("network failed validation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidNetwork(Vec<Violation>),
    #[error("spawn event {index}: {reason}")]
    BadEvent { index: usize, reason: String },
    #[error("unknown lane {0}")]
    UnknownLane(usize),
    #[error("unknown intersection {0}")]
    UnknownIntersection(usize),
    #[error("phase {0} is out of range")]
    PhaseOutOfRange(usize),
    #[error("green duration must be at least one second")]
    ZeroGreen,
    #[error("no decision is due at this intersection")]
    DecisionNotDue,
    #[error("cannot place vehicles: {0}")]
    Placement(String),
    #[error("kinematics: {0}")]
    Kinematics(#[from] crate::signalmath::SignalMathError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VehicleId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VehicleStatus {
    Buffered,
    Moving,
    Queued,
    Exited,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleState {
    pub id: VehicleId,
    pub route: Vec<MovementId>,
    /// Index into `route` of the next movement to take.
    pub hop: usize,
    pub lane: LaneId,
    pub pos: f64,
    pub speed: f64,
    pub status: VehicleStatus,
    /// Scheduled entry time t_e.
    pub entered_at: f64,
    /// Time t_l the vehicle left the network.
    pub exited_at: Option<f64>,
    pub accel: f64,
    pub max_speed: f64,
}

impl VehicleState {
    pub fn remaining_route(&self) -> &[MovementId] {
        &self.route[self.hop..]
    }

    /// Route fully consumed and the vehicle has left the network.
    pub fn reached_destination(&self) -> bool {
        self.status == VehicleStatus::Exited && self.hop == self.route.len()
    }
}

/// Which vehicles count toward an incoming-lane observation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountMode {
    /// Every vehicle on the lane.
    #[default]
    Total,
    /// Only vehicles standing in the stop-line queue.
    Queued,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepTelemetry {
    /// Start of the tick; the counts below describe time `time + 1`.
    pub time: u32,
    pub occupancy: Vec<u32>,
    /// Phase and mode in force during the tick, per intersection.
    pub signals: Vec<(usize, SignalMode)>,
    pub entered: u32,
    pub exited: u32,
    /// Crossings per movement during the tick.
    pub discharged: Vec<u32>,
    pub crossings: Vec<(VehicleId, MovementId)>,
}

#[derive(Debug, Clone, Default)]
struct LaneRuntime {
    /// Front (nearest the stop line) first.
    vehicles: VecDeque<usize>,
    queue_len: u32,
}

#[derive(Debug, Clone, Copy, Default)]
struct Discharge {
    green_last_tick: bool,
    blocked_last_tick: bool,
    /// Seconds since the current platoon started moving.
    clock: u32,
    /// Vehicles of the current platoon that have crossed.
    served: u32,
}

#[derive(Debug, Clone)]
pub struct World {
    net: Arc<RoadNetwork>,
    kin: KinematicParams,
    spacing: f64,
    time: u32,
    signals: Vec<SignalState>,
    vehicles: Vec<VehicleState>,
    lanes: Vec<LaneRuntime>,
    exit_lane: Vec<bool>,
    schedule: Vec<SpawnEvent>,
    cursor: usize,
    buffers: Vec<VecDeque<usize>>,
    discharge: Vec<Discharge>,
    entered_total: u64,
    exited_total: u64,
}

impl World {
    /// Validates the network and every scheduled vehicle, then builds a world
    /// at t = 0 with all signals awaiting their first decision.
    pub fn new(
        net: Arc<RoadNetwork>,
        mut schedule: Vec<SpawnEvent>,
        kin: KinematicParams,
        yellow: u32,
    ) -> Result<World, EngineError> {
        net.validate().map_err(EngineError::InvalidNetwork)?;
        kin.validate()?;
        let entry: Vec<bool> = {
            let mut v = vec![false; net.lanes.len()];
            for b in &net.boundary_entries {
                v[b.lane.0] = true;
            }
            v
        };
        for (index, e) in schedule.iter().enumerate() {
            let bad = |reason: String| EngineError::BadEvent { index, reason };
            if !(e.time.is_finite() && e.time >= 0.0) {
                return Err(bad(format!("time {} is not a finite non-negative number", e.time)));
            }
            if e.entry_lane.0 >= net.lanes.len() || !entry[e.entry_lane.0] {
                return Err(bad(format!("lane {} is not a boundary entry lane", e.entry_lane)));
            }
            check_route(&net, e.entry_lane, &e.route).map_err(bad)?;
            if let Some(v) = &e.vehicle {
                v.validate().map_err(|err| bad(err.to_string()))?;
            }
        }
        schedule.sort_by(|a, b| a.time.total_cmp(&b.time));

        let exit_lane = (0..net.lanes.len()).map(|l| net.is_exit_lane(LaneId(l))).collect();
        Ok(World {
            spacing: net.vehicle_length + net.min_gap,
            kin,
            time: 0,
            signals: vec![SignalState::new(yellow); net.intersections.len()],
            vehicles: Vec::new(),
            lanes: vec![LaneRuntime::default(); net.lanes.len()],
            exit_lane,
            schedule,
            cursor: 0,
            buffers: vec![VecDeque::new(); net.lanes.len()],
            discharge: vec![Discharge::default(); net.movement_count()],
            entered_total: 0,
            exited_total: 0,
            net,
        })
    }

    pub fn network(&self) -> &Arc<RoadNetwork> {
        &self.net
    }

    pub fn kinematics(&self) -> &KinematicParams {
        &self.kin
    }

    pub fn time(&self) -> u32 {
        self.time
    }

    pub fn signals(&self) -> &[SignalState] {
        &self.signals
    }

    pub fn signal(&self, i: IntersectionId) -> Result<&SignalState, EngineError> {
        self.signals.get(i.0).ok_or(EngineError::UnknownIntersection(i.0))
    }

    pub fn needs_decision(&self, i: IntersectionId) -> bool {
        self.signals.get(i.0).is_some_and(SignalState::needs_decision)
    }

    pub fn apply_decision(&mut self, i: IntersectionId, phase: usize, green: u32) -> Result<(), EngineError> {
        self.signals
            .get_mut(i.0)
            .ok_or(EngineError::UnknownIntersection(i.0))?
            .apply(phase, green)
    }

    /// Every vehicle created so far, including those that left.
    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    /// Scheduled spawns, sorted by time.
    pub fn schedule(&self) -> &[SpawnEvent] {
        &self.schedule
    }

    pub fn lane_vehicles(&self, lane: LaneId) -> impl Iterator<Item = &VehicleState> + '_ {
        self.lanes[lane.0].vehicles.iter().map(|&v| &self.vehicles[v])
    }

    /// Vehicles currently on `lane`; buffered vehicles are not on a lane.
    pub fn occupancy(&self, lane: LaneId) -> Result<u32, EngineError> {
        self.lanes
            .get(lane.0)
            .map(|l| l.vehicles.len() as u32)
            .ok_or(EngineError::UnknownLane(lane.0))
    }

    pub fn queue_len(&self, lane: LaneId) -> Result<u32, EngineError> {
        self.lanes
            .get(lane.0)
            .map(|l| l.queue_len)
            .ok_or(EngineError::UnknownLane(lane.0))
    }

    pub fn lane_occupancies(&self) -> Vec<u32> {
        self.lanes.iter().map(|l| l.vehicles.len() as u32).collect()
    }

    pub fn entered_total(&self) -> u64 {
        self.entered_total
    }

    pub fn exited_total(&self) -> u64 {
        self.exited_total
    }

    pub fn on_network(&self) -> u64 {
        self.lanes.iter().map(|l| l.vehicles.len() as u64).sum()
    }

    pub fn buffered(&self) -> u64 {
        self.buffers.iter().map(|b| b.len() as u64).sum()
    }

    fn count(&self, lane: LaneId, mode: CountMode) -> u32 {
        let l = &self.lanes[lane.0];
        match mode {
            CountMode::Total => l.vehicles.len() as u32,
            CountMode::Queued => l.queue_len,
        }
    }

    /// Twelve incoming-lane counts in W, E, N, S × left, straight, right
    /// order, then the one-hot of the current phase.
    pub fn observe(&self, i: IntersectionId, mode: CountMode) -> Result<Observation, EngineError> {
        let inter = self
            .net
            .intersections
            .get(i.0)
            .ok_or(EngineError::UnknownIntersection(i.0))?;
        let mut obs = [0.0; OBSERVATION_WIDTH];
        for (k, &lane) in inter.incoming_lanes.iter().enumerate() {
            obs[k] = self.count(lane, mode) as f64;
        }
        obs[MOVEMENTS_PER_INTERSECTION + self.signals[i.0].phase] = 1.0;
        Ok(obs)
    }

    /// `(n_in, n_out, n_max)` of each local movement. `n_out` always counts
    /// every vehicle on the out lane.
    pub fn movement_counts(
        &self,
        i: IntersectionId,
        mode: CountMode,
    ) -> Result<[MovementCounts; MOVEMENTS_PER_INTERSECTION], EngineError> {
        let inter = self
            .net
            .intersections
            .get(i.0)
            .ok_or(EngineError::UnknownIntersection(i.0))?;
        Ok(std::array::from_fn(|k| {
            let out = inter.outgoing_lanes[k];
            MovementCounts::new(
                self.count(inter.incoming_lanes[k], mode),
                self.count(out, CountMode::Total),
                self.net.lane(out).capacity,
            )
        }))
    }

    /// Places `n` vehicles on an empty lane, packed back from the stop line,
    /// as if they had been standing there since now. `route` starts with the
    /// movement leaving `lane` (empty for an exit lane).
    pub fn place_vehicles(
        &mut self,
        lane: LaneId,
        route: Vec<MovementId>,
        n: u32,
    ) -> Result<Vec<VehicleId>, EngineError> {
        let l = self.net.lanes.get(lane.0).ok_or(EngineError::UnknownLane(lane.0))?.clone();
        if !self.lanes[lane.0].vehicles.is_empty() {
            return Err(EngineError::Placement(format!("lane {lane} is not empty")));
        }
        if n > l.capacity {
            return Err(EngineError::Placement(format!(
                "{n} vehicles exceed the capacity {} of lane {lane}",
                l.capacity
            )));
        }
        if self.exit_lane[lane.0] {
            if !route.is_empty() {
                return Err(EngineError::Placement("vehicles on an exit lane have no route left".into()));
            }
        } else {
            check_route(&self.net, lane, &route).map_err(EngineError::Placement)?;
        }
        let queued = !self.exit_lane[lane.0];
        let mut ids = Vec::with_capacity(n as usize);
        for k in 0..n {
            let id = self.vehicles.len();
            self.vehicles.push(VehicleState {
                id: VehicleId(id),
                route: route.clone(),
                hop: 0,
                lane,
                pos: (l.length - k as f64 * self.spacing).max(0.0),
                speed: 0.0,
                status: if queued { VehicleStatus::Queued } else { VehicleStatus::Moving },
                entered_at: self.time as f64,
                exited_at: None,
                accel: self.kin.accel,
                max_speed: self.kin.max_speed,
            });
            self.lanes[lane.0].vehicles.push_back(id);
            ids.push(VehicleId(id));
        }
        if queued {
            self.lanes[lane.0].queue_len += n;
        }
        self.entered_total += n as u64;
        Ok(ids)
    }

    /// Advances the world by one tick; `dt` must be exactly 1.
    pub fn step(&mut self, dt: f64) -> Result<StepTelemetry, EngineError> {
        if dt != 1.0 {
            return Err(EngineError::TickNotOne(dt));
        }
        let entered = self.spawn();
        self.advance();
        let (discharged, crossings) = self.discharge_all();
        let exited = self.remove_exited();

        let signals = self.signals.iter().map(|s| (s.phase, s.mode)).collect();
        let telemetry = StepTelemetry {
            time: self.time,
            occupancy: self.lane_occupancies(),
            signals,
            entered,
            exited,
            discharged,
            crossings,
        };
        for s in &mut self.signals {
            s.tick();
        }
        self.time += 1;
        Ok(telemetry)
    }

    fn effective_vmax(&self, v: usize, lane: LaneId) -> f64 {
        self.vehicles[v].max_speed.min(self.net.lane(lane).max_speed)
    }

    fn spawn(&mut self) -> u32 {
        let horizon = self.time as f64 + 1.0;
        let mut entered = 0;
        while self.cursor < self.schedule.len() && self.schedule[self.cursor].time < horizon {
            let e = &self.schedule[self.cursor];
            let k = e.vehicle.unwrap_or(self.kin);
            let id = self.vehicles.len();
            self.vehicles.push(VehicleState {
                id: VehicleId(id),
                route: e.route.clone(),
                hop: 0,
                lane: e.entry_lane,
                pos: 0.0,
                speed: 0.0,
                status: VehicleStatus::Buffered,
                entered_at: e.time,
                exited_at: None,
                accel: k.accel,
                max_speed: k.max_speed,
            });
            self.buffers[e.entry_lane.0].push_back(id);
            self.cursor += 1;
            entered += 1;
        }
        self.entered_total += entered as u64;

        for lane in 0..self.buffers.len() {
            let capacity = self.net.lanes[lane].capacity as usize;
            while !self.buffers[lane].is_empty() && self.lanes[lane].vehicles.len() < capacity {
                let v = self.buffers[lane].pop_front().unwrap();
                let speed = self.effective_vmax(v, LaneId(lane));
                let veh = &mut self.vehicles[v];
                veh.status = VehicleStatus::Moving;
                veh.speed = speed;
                veh.pos = 0.0;
                self.lanes[lane].vehicles.push_back(v);
            }
        }
        entered
    }

    fn advance(&mut self) {
        for lane in 0..self.lanes.len() {
            if self.lanes[lane].vehicles.is_empty() {
                continue;
            }
            let length = self.net.lanes[lane].length;
            let is_exit = self.exit_lane[lane];
            let mut ahead: Option<usize> = None;
            let mut queued = 0;
            for idx in 0..self.lanes[lane].vehicles.len() {
                let v = self.lanes[lane].vehicles[idx];
                let vmax = self.effective_vmax(v, LaneId(lane));
                let limit = match ahead {
                    Some(a) if self.vehicles[a].status != VehicleStatus::Exited => self.vehicles[a].pos - self.spacing,
                    _ if is_exit => f64::INFINITY,
                    _ => length,
                };
                let ahead_state = ahead.map(|a| (self.vehicles[a].status, self.vehicles[a].speed));
                let veh = &mut self.vehicles[v];
                let limit = limit.max(veh.pos);
                match veh.status {
                    VehicleStatus::Queued => {
                        veh.pos = (veh.pos + vmax).min(limit);
                    }
                    VehicleStatus::Moving => {
                        let (dist, v_new) = travel(veh.speed, veh.accel, vmax);
                        if veh.pos + dist >= limit {
                            veh.pos = limit;
                            match ahead_state {
                                None if !is_exit => {
                                    veh.status = VehicleStatus::Queued;
                                    veh.speed = 0.0;
                                }
                                Some((VehicleStatus::Queued, _)) => {
                                    veh.status = VehicleStatus::Queued;
                                    veh.speed = 0.0;
                                }
                                Some((_, s)) => veh.speed = v_new.min(s),
                                None => veh.speed = v_new,
                            }
                        } else {
                            veh.pos += dist;
                            veh.speed = v_new;
                        }
                        if is_exit && veh.pos >= length {
                            veh.pos = length;
                            veh.status = VehicleStatus::Exited;
                        }
                    }
                    VehicleStatus::Buffered | VehicleStatus::Exited => {}
                }
                if veh.status == VehicleStatus::Queued {
                    queued += 1;
                }
                ahead = Some(v);
            }
            self.lanes[lane].queue_len = queued;
        }
    }

    fn movement_green(&self, m: MovementId) -> bool {
        let mv = self.net.movement(m);
        if mv.turn == Turn::Right {
            return true;
        }
        let signal = &self.signals[mv.intersection.0];
        let phase = &self.net.intersections[mv.intersection.0].phases[signal.phase];
        signal.mode == SignalMode::Green && signal.remaining > 0 && phase.movements.contains(&mv.local_index())
    }

    fn discharge_all(&mut self) -> (Vec<u32>, Vec<(VehicleId, MovementId)>) {
        let mut discharged = vec![0u32; self.discharge.len()];
        let mut crossings = Vec::new();
        for m in 0..self.discharge.len() {
            let mid = MovementId(m);
            let green = self.movement_green(mid);
            let in_lane = self.net.movement(mid).in_lane;
            let head_queued = self.lanes[in_lane.0]
                .vehicles
                .front()
                .is_some_and(|&v| self.vehicles[v].status == VehicleStatus::Queued);
            let mut d = self.discharge[m];
            if !green || !head_queued || !d.green_last_tick || d.blocked_last_tick {
                d.clock = 0;
                d.served = 0;
            }
            d.green_last_tick = green;
            d.blocked_last_tick = false;
            if green && head_queued {
                d.clock += 1;
                let mut allowed = platoon_discharged_by(d.clock as f64, &self.kin).saturating_sub(d.served);
                while allowed > 0 {
                    let Some(&v) = self.lanes[in_lane.0].vehicles.front() else { break };
                    if self.vehicles[v].status != VehicleStatus::Queued {
                        break;
                    }
                    let veh = &self.vehicles[v];
                    let target = if veh.hop + 1 < veh.route.len() {
                        self.net.movement(veh.route[veh.hop + 1]).in_lane
                    } else {
                        self.net.movement(veh.route[veh.hop]).out_lane
                    };
                    if self.lanes[target.0].vehicles.len() >= self.net.lane(target).capacity as usize {
                        d.blocked_last_tick = true;
                        break;
                    }
                    self.lanes[in_lane.0].vehicles.pop_front();
                    self.lanes[in_lane.0].queue_len -= 1;
                    let speed = self.effective_vmax(v, target).min(self.vehicles[v].accel * d.clock as f64);
                    let veh = &mut self.vehicles[v];
                    veh.hop += 1;
                    veh.lane = target;
                    veh.pos = 0.0;
                    veh.speed = speed;
                    veh.status = VehicleStatus::Moving;
                    self.lanes[target.0].vehicles.push_back(v);
                    crossings.push((VehicleId(v), mid));
                    discharged[m] += 1;
                    d.served += 1;
                    allowed -= 1;
                }
            }
            self.discharge[m] = d;
        }
        (discharged, crossings)
    }

    fn remove_exited(&mut self) -> u32 {
        let t = self.time as f64 + 1.0;
        let mut exited = 0;
        for lane in 0..self.lanes.len() {
            if !self.exit_lane[lane] {
                continue;
            }
            while let Some(&v) = self.lanes[lane].vehicles.front() {
                if self.vehicles[v].status != VehicleStatus::Exited {
                    break;
                }
                self.lanes[lane].vehicles.pop_front();
                self.vehicles[v].exited_at = Some(t);
                exited += 1;
            }
        }
        self.exited_total += exited as u64;
        exited
    }
}

/// Distance covered in one second from speed `v` accelerating at `a` up to
/// `vmax`, and the speed at the end of the second.
fn travel(v: f64, a: f64, vmax: f64) -> (f64, f64) {
    if v >= vmax {
        return (vmax, vmax);
    }
    let t_ramp = (vmax - v) / a;
    if t_ramp >= 1.0 {
        (v + 0.5 * a, v + a)
    } else {
        (v * t_ramp + 0.5 * a * t_ramp * t_ramp + vmax * (1.0 - t_ramp), vmax)
    }
}

fn check_route(net: &RoadNetwork, start: LaneId, route: &[MovementId]) -> Result<(), String> {
    let Some(&first) = route.first() else {
        return Err("route is empty".into());
    };
    let count = net.movement_count();
    if let Some(m) = route.iter().find(|m| m.0 >= count) {
        return Err(format!("unknown movement {m}"));
    }
    if net.movement(first).in_lane != start {
        return Err(format!("movement {first} does not leave lane {start}"));
    }
    for pair in route.windows(2) {
        let (a, b) = (net.movement(pair[0]), net.movement(pair[1]));
        if a.out_road != b.in_road {
            return Err(format!("movement {} does not follow movement {}", b.id, a.id));
        }
    }
    let last = net.movement(*route.last().unwrap()).out_lane;
    if !net.is_exit_lane(last) {
        return Err("route does not end on an exit lane".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests;
