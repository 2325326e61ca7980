use std::path::Path;

use super::{FlowError, SpawnEvent};
use crate::netmodel::LaneId;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalStats {
    /// `(arrival time, gap to the next arrival)` for consecutive arrivals.
    pub series: Vec<(f64, f64)>,
    /// `None` when there are fewer than two arrivals.
    pub mean: Option<f64>,
}

/// Gaps between consecutive arrivals on `lane`.
pub fn arrival_interval_stats(events: &[SpawnEvent], lane: LaneId) -> IntervalStats {
    let times: Vec<f64> = events.iter().filter(|e| e.entry_lane == lane).map(|e| e.time).collect();
    let series: Vec<(f64, f64)> = times.windows(2).map(|w| (w[0], w[1] - w[0])).collect();
    let mean = (!series.is_empty()).then(|| series.iter().map(|s| s.1).sum::<f64>() / series.len() as f64);
    IntervalStats { series, mean }
}

pub fn write_interval_csv(path: impl AsRef<Path>, stats: &IntervalStats) -> Result<(), FlowError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["time", "gap"])?;
    for (t, gap) in &stats.series {
        w.write_record([t.to_string(), gap.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arrivals(times: &[f64]) -> Vec<SpawnEvent> {
        times
            .iter()
            .map(|&time| SpawnEvent {
                time,
                entry_lane: LaneId(4),
                route: vec![],
                vehicle: None,
            })
            .collect()
    }

    #[test]
    fn regular_arrivals() {
        let s = arrival_interval_stats(&arrivals(&[0.0, 20.0, 40.0]), LaneId(4));
        assert_eq!(s.series, vec![(0.0, 20.0), (20.0, 20.0)]);
        assert_eq!(s.mean, Some(20.0));
    }

    #[test]
    fn single_arrival_and_other_lanes() {
        let s = arrival_interval_stats(&arrivals(&[7.0]), LaneId(4));
        assert!(s.series.is_empty());
        assert_eq!(s.mean, None);
        assert!(arrival_interval_stats(&arrivals(&[0.0, 1.0]), LaneId(5)).series.is_empty());
    }

    #[test]
    fn csv_output() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("gaps.csv");
        let s = arrival_interval_stats(&arrivals(&[0.0, 3.0, 10.5]), LaneId(4));
        write_interval_csv(&path, &s).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "time,gap\n0,3\n3,7.5\n");
    }
}
