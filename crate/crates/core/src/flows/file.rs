//! CityFlow-style flow lists.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{expand_flows, flows_from_events, FlowError, FlowSpec, SpawnEvent};
use crate::netmodel::{MovementId, RoadNetwork};
use crate::signalmath::KinematicParams;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VehicleDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_gap: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceleration: Option<f64>,
    /// CityFlow's name for the normal acceleration; used when `acceleration`
    /// is absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usual_pos_acc: Option<f64>,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

impl VehicleDoc {
    fn merged(&self, base: &KinematicParams) -> KinematicParams {
        KinematicParams {
            accel: self.acceleration.or(self.usual_pos_acc).unwrap_or(base.accel),
            max_speed: self.max_speed.unwrap_or(base.max_speed),
            vehicle_length: self.length.unwrap_or(base.vehicle_length),
            min_gap: self.min_gap.unwrap_or(base.min_gap),
        }
    }

    fn from_params(k: &KinematicParams) -> Self {
        VehicleDoc {
            length: Some(k.vehicle_length),
            min_gap: Some(k.min_gap),
            max_speed: Some(k.max_speed),
            acceleration: Some(k.accel),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct FlowRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle: Option<VehicleDoc>,
    /// Road ids, entry road first.
    pub route: Vec<String>,
    pub interval: f64,
    pub start_time: f64,
    /// Inclusive.
    pub end_time: f64,
}

impl FlowRecord {
    fn resolve(&self, index: usize, net: &RoadNetwork, base: &KinematicParams) -> Result<FlowSpec, FlowError> {
        let malformed = |reason: String| FlowError::Malformed { index, reason };
        for (name, v) in [
            ("interval", self.interval),
            ("startTime", self.start_time),
            ("endTime", self.end_time),
        ] {
            if !v.is_finite() {
                return Err(malformed(format!("{name} is not finite")));
            }
        }
        if self.interval <= 0.0 {
            return Err(malformed(format!("interval must be positive, got {}", self.interval)));
        }
        if self.start_time < 0.0 {
            return Err(malformed(format!("startTime must be non-negative, got {}", self.start_time)));
        }
        if self.start_time > self.end_time {
            return Err(malformed(format!(
                "startTime {} is after endTime {}",
                self.start_time, self.end_time
            )));
        }
        let vehicle = match &self.vehicle {
            Some(doc) => {
                let k = doc.merged(base);
                k.validate().map_err(|e| malformed(format!("vehicle: {e}")))?;
                Some(k)
            }
            None => None,
        };

        let index_of = net.road_index();
        let mut roads = Vec::with_capacity(self.route.len());
        for name in &self.route {
            match index_of.get(name.as_str()) {
                Some(&r) => roads.push(r),
                None => {
                    return Err(FlowError::UnknownRoad {
                        index,
                        road: name.clone(),
                    })
                }
            }
        }
        let route_err = |reason: String| FlowError::Route { index, reason };
        if roads.len() < 2 {
            return Err(route_err("route needs at least an entry road and an exit road".into()));
        }
        let mut route: Vec<MovementId> = Vec::with_capacity(roads.len() - 1);
        for pair in roads.windows(2) {
            let m = net.movement_between(pair[0], pair[1]).ok_or_else(|| {
                route_err(format!(
                    "no movement from {} to {}",
                    net.road(pair[0]).name,
                    net.road(pair[1]).name
                ))
            })?;
            route.push(m);
        }
        let entry = net.movement(route[0]).in_lane;
        if !net.boundary_entries.iter().any(|b| b.lane == entry) {
            return Err(route_err(format!("{} is not a boundary entry road", self.route[0])));
        }
        let last = net.movement(*route.last().unwrap()).out_lane;
        if !net.is_exit_lane(last) {
            return Err(route_err(format!(
                "{} does not leave the network",
                self.route.last().unwrap()
            )));
        }
        Ok(FlowSpec {
            route,
            start: self.start_time,
            end: self.end_time,
            interval: self.interval,
            vehicle,
        })
    }
}

/// Parses a JSON flow list and expands it into time-ordered spawn events.
/// Vehicle fields missing from a record fall back to `base`.
pub fn parse_flow_json(text: &str, net: &RoadNetwork, base: &KinematicParams) -> Result<Vec<SpawnEvent>, FlowError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    let raw: Vec<serde_json::Value> = serde_json::from_str(text)?;
    let mut flows = Vec::with_capacity(raw.len());
    for (index, value) in raw.into_iter().enumerate() {
        let record: FlowRecord = serde_json::from_value(value).map_err(|e| FlowError::Malformed {
            index,
            reason: e.to_string(),
        })?;
        flows.push(record.resolve(index, net, base)?);
    }
    Ok(expand_flows(&flows, net))
}

pub fn load_flow_file(
    path: impl AsRef<Path>,
    net: &RoadNetwork,
    base: &KinematicParams,
) -> Result<Vec<SpawnEvent>, FlowError> {
    parse_flow_json(&fs::read_to_string(path)?, net, base)
}

/// Compresses events into flow records.
pub fn flow_records(events: &[SpawnEvent], net: &RoadNetwork) -> Vec<FlowRecord> {
    flows_from_events(events)
        .into_iter()
        .map(|f| {
            let mut route = Vec::with_capacity(f.route.len() + 1);
            route.push(net.road(net.movement(f.route[0]).in_road).name.clone());
            for &m in &f.route {
                route.push(net.road(net.movement(m).out_road).name.clone());
            }
            FlowRecord {
                vehicle: f.vehicle.as_ref().map(VehicleDoc::from_params),
                route,
                interval: f.interval,
                start_time: f.start,
                end_time: f.end,
            }
        })
        .collect()
}

pub fn write_flow_file(path: impl AsRef<Path>, events: &[SpawnEvent], net: &RoadNetwork) -> Result<(), FlowError> {
    let text = serde_json::to_string_pretty(&flow_records(events, net))?;
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::{gen_syn_heavy, gen_syn_light};
    use crate::netmodel::build_grid;

    fn net() -> RoadNetwork {
        build_grid(3, 3, 300.0, 300.0, 5.0, 2.5, 40.0 / 3.6).unwrap()
    }

    fn k() -> KinematicParams {
        KinematicParams::default()
    }

    // road_0_3_0 enters the top row from the west; the next two hops go east.
    const ROUTE: &str = r#"["road_0_3_0", "road_1_3_0", "road_2_3_0", "road_3_3_0"]"#;

    #[test]
    fn interval_expansion() {
        let net = net();
        let text = format!(r#"[{{"route": {ROUTE}, "interval": 20, "startTime": 0, "endTime": 59}}]"#);
        let events = parse_flow_json(&text, &net, &k()).unwrap();
        let times: Vec<f64> = events.iter().map(|e| e.time).collect();
        assert_eq!(times, vec![0.0, 20.0, 40.0]);
        assert_eq!(events[0].route.len(), 3);
        assert!(events[0].vehicle.is_none());
    }

    #[test]
    fn empty_inputs() {
        let net = net();
        assert!(parse_flow_json("", &net, &k()).unwrap().is_empty());
        assert!(parse_flow_json("[]", &net, &k()).unwrap().is_empty());
    }

    #[test]
    fn unknown_road_is_named() {
        let net = net();
        let text = r#"[{"route": ["road_0_3_0", "road_9_9_9"], "interval": 5, "startTime": 0, "endTime": 10}]"#;
        match parse_flow_json(text, &net, &k()) {
            Err(FlowError::UnknownRoad { index: 0, road }) => assert_eq!(road, "road_9_9_9"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_record_reports_index() {
        let net = net();
        let text = format!(
            r#"[{{"route": {ROUTE}, "interval": 20, "startTime": 0, "endTime": 59}},
                {{"route": {ROUTE}, "interval": "often", "startTime": 0, "endTime": 59}}]"#
        );
        assert!(matches!(
            parse_flow_json(&text, &net, &k()),
            Err(FlowError::Malformed { index: 1, .. })
        ));
        let text = format!(r#"[{{"route": {ROUTE}, "interval": 0, "startTime": 0, "endTime": 59}}]"#);
        assert!(matches!(
            parse_flow_json(&text, &net, &k()),
            Err(FlowError::Malformed { index: 0, .. })
        ));
    }

    #[test]
    fn disconnected_and_truncated_routes() {
        let net = net();
        let text = r#"[{"route": ["road_0_3_0", "road_2_3_0"], "interval": 5, "startTime": 0, "endTime": 0}]"#;
        assert!(matches!(parse_flow_json(text, &net, &k()), Err(FlowError::Route { .. })));
        let text = r#"[{"route": ["road_0_3_0", "road_1_3_0"], "interval": 5, "startTime": 0, "endTime": 0}]"#;
        assert!(matches!(parse_flow_json(text, &net, &k()), Err(FlowError::Route { .. })));
        let text = r#"[{"route": ["road_1_3_0", "road_2_3_0", "road_3_3_0"], "interval": 5, "startTime": 0, "endTime": 0}]"#;
        assert!(matches!(parse_flow_json(text, &net, &k()), Err(FlowError::Route { .. })));
    }

    #[test]
    fn vehicle_fields_override_defaults() {
        let net = net();
        let text = format!(
            r#"[{{"vehicle": {{"maxSpeed": 8.0, "usualPosAcc": 1.5, "maxPosAcc": 3.0}},
                 "route": {ROUTE}, "interval": 20, "startTime": 0, "endTime": 0}}]"#
        );
        let events = parse_flow_json(&text, &net, &k()).unwrap();
        let v = events[0].vehicle.unwrap();
        assert_eq!(v.max_speed, 8.0);
        assert_eq!(v.accel, 1.5);
        assert_eq!(v.vehicle_length, 5.0);
    }

    #[test]
    fn generated_sets_round_trip() {
        let net = net();
        let dir = tempfile::tempdir().unwrap();
        for events in [gen_syn_light(&net).unwrap(), gen_syn_heavy(&net).unwrap()] {
            let path = dir.path().join("flow.json");
            write_flow_file(&path, &events, &net).unwrap();
            let back = load_flow_file(&path, &net, &k()).unwrap();
            assert_eq!(back, events);
        }
    }

    #[test]
    fn custom_vehicles_round_trip() {
        let net = net();
        let mut events = gen_syn_light(&net).unwrap();
        for e in events.iter_mut().step_by(3) {
            e.vehicle = Some(KinematicParams::new(1.5, 9.0, 4.5, 2.0).unwrap());
        }
        let text = serde_json::to_string(&flow_records(&events, &net)).unwrap();
        assert_eq!(parse_flow_json(&text, &net, &k()).unwrap(), events);
    }
}
