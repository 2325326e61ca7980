use serde::{Deserialize, Serialize};

use crate::engine::VehicleState;

/// Mean over vehicles of `t_l - t_e`, using `T - t_e` for vehicles that
/// have not left by the horizon. Zero when there are no vehicles.
pub fn avg_travel_time(vehicles: &[VehicleState], horizon: f64) -> f64 {
    if vehicles.is_empty() {
        return 0.0;
    }
    let total: f64 = vehicles
        .iter()
        .map(|v| match v.exited_at {
            Some(t_l) if v.reached_destination() => t_l - v.entered_at,
            _ => horizon - v.entered_at,
        })
        .sum();
    total / vehicles.len() as f64
}

/// Vehicles that completed their route.
pub fn throughput(vehicles: &[VehicleState]) -> u64 {
    vehicles.iter().filter(|v| v.reached_destination()).count() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub average_travel_time: f64,
    pub throughput: u64,
    /// Vehicles whose scheduled entry fell inside the episode.
    pub generated: u64,
}

impl EpisodeMetrics {
    pub fn from_vehicles(vehicles: &[VehicleState], horizon: f64) -> Self {
        EpisodeMetrics {
            average_travel_time: avg_travel_time(vehicles, horizon),
            throughput: throughput(vehicles),
            generated: vehicles.len() as u64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    pub seed: u64,
    #[serde(flatten)]
    pub metrics: EpisodeMetrics,
}

/// Summary written to `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub name: String,
    pub controller: String,
    pub config_fingerprint: String,
    /// Median over seeds.
    pub average_travel_time: f64,
    /// Median over seeds.
    pub throughput: f64,
    pub mean_average_travel_time: f64,
    pub per_seed: Vec<SeedMetrics>,
}

impl MetricsReport {
    pub fn new(name: &str, controller: &str, fingerprint: &str, per_seed: Vec<SeedMetrics>) -> Self {
        let att: Vec<f64> = per_seed.iter().map(|s| s.metrics.average_travel_time).collect();
        let thr: Vec<f64> = per_seed.iter().map(|s| s.metrics.throughput as f64).collect();
        MetricsReport {
            name: name.to_string(),
            controller: controller.to_string(),
            config_fingerprint: fingerprint.to_string(),
            average_travel_time: median(&att),
            throughput: median(&thr),
            mean_average_travel_time: if att.is_empty() {
                0.0
            } else {
                att.iter().sum::<f64>() / att.len() as f64
            },
            per_seed,
        }
    }
}

/// Median; the mean of the middle pair for even lengths, 0 when empty.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{VehicleId, VehicleStatus};
    use crate::netmodel::{LaneId, MovementId};

    fn vehicle(entered: f64, exited: Option<f64>) -> VehicleState {
        VehicleState {
            id: VehicleId(0),
            route: vec![MovementId(0)],
            hop: if exited.is_some() { 1 } else { 0 },
            lane: LaneId(0),
            pos: 0.0,
            speed: 0.0,
            status: if exited.is_some() {
                VehicleStatus::Exited
            } else {
                VehicleStatus::Moving
            },
            entered_at: entered,
            exited_at: exited,
            accel: 2.0,
            max_speed: 10.0,
        }
    }

    #[test]
    fn travel_time_rule() {
        let vs = [vehicle(0.0, Some(100.0)), vehicle(3500.0, None)];
        assert_eq!(avg_travel_time(&vs, 3600.0), 100.0);
        assert_eq!(avg_travel_time(&[vehicle(5.0, Some(5.0))], 3600.0), 0.0);
        assert_eq!(avg_travel_time(&[vehicle(0.0, None)], 3600.0), 3600.0);
        assert_eq!(avg_travel_time(&[], 3600.0), 0.0);
    }

    #[test]
    fn throughput_counts_finished_routes() {
        assert_eq!(throughput(&[]), 0);
        let mut vs: Vec<VehicleState> = (0..5).map(|k| vehicle(k as f64, Some(50.0))).collect();
        vs.push(vehicle(1.0, None));
        vs.push(vehicle(2.0, None));
        assert_eq!(throughput(&vs), 5);
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[]), 0.0);
    }
}
