use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::engine::TelemetryRow;
use crate::netmodel::{standard_phase_table, Phase, PHASE_COUNT};
use crate::signalmath::{n_pass, MovementCounts};

/// One decision and what its interval achieved. The interval runs from the
/// decision to the intersection's next decision (or the end of telemetry),
/// yellow included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenInterval {
    pub time: u32,
    pub intersection: usize,
    pub phase: usize,
    pub green: u32,
    /// Vehicles on each of the phase's movements at the decision.
    pub n_in: [u32; 2],
    /// `n_pass` per movement at the decision.
    pub ideal: [u32; 2],
    /// Vehicles present at the decision that crossed during the interval.
    pub actual: [u32; 2],
}

impl GreenInterval {
    pub fn ideal_total(&self) -> u32 {
        self.ideal[0] + self.ideal[1]
    }

    pub fn actual_total(&self) -> u32 {
        self.actual[0] + self.actual[1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseStat {
    pub phase: usize,
    pub chosen: u64,
    pub share: f64,
    /// Mean over all decisions of the phase's vehicle count (mean of its two
    /// incoming movements).
    pub mean_vehicles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseStudySummary {
    pub decisions: u64,
    pub max_vehicle_phase_frequency: Option<f64>,
    pub per_intersection_frequency: BTreeMap<usize, f64>,
    /// Intervals whose summed actual exceeds the summed ideal.
    pub interval_violations: u64,
    /// Movements whose actual exceeds their own ideal.
    pub movement_violations: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseStudy {
    pub phases: Vec<PhaseStat>,
    pub intervals: Vec<GreenInterval>,
    pub summary: CaseStudySummary,
}

/// Vehicle count of each phase: mean of its two incoming movements.
pub fn phase_vehicle_counts(n_in: &[u32; 12], phases: &[Phase]) -> Vec<f64> {
    phases
        .iter()
        .map(|p| 0.5 * f64::from(n_in[p.movements[0]] + n_in[p.movements[1]]))
        .collect()
}

/// Index of the largest count; the lowest index wins ties.
pub fn max_vehicle_phase(counts: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &c) in counts.iter().enumerate() {
        if best.map_or(true, |b| c > counts[b]) {
            best = Some(i);
        }
    }
    best
}

/// Derives the case-study tables from telemetry of the standard phase layout.
pub fn case_study(rows: &[TelemetryRow]) -> CaseStudy {
    case_study_with(rows, &standard_phase_table())
}

pub fn case_study_with(rows: &[TelemetryRow], phases: &[Phase]) -> CaseStudy {
    let mut by_node: BTreeMap<usize, Vec<&TelemetryRow>> = BTreeMap::new();
    for r in rows {
        by_node.entry(r.intersection).or_default().push(r);
    }

    let mut chosen = vec![0u64; phases.len().max(PHASE_COUNT)];
    let mut vehicle_sum = vec![0.0; chosen.len()];
    let mut intervals = Vec::new();
    let mut hits = 0u64;
    let mut per_node = BTreeMap::new();

    for (&node, node_rows) in &by_node {
        let mut node_rows = node_rows.clone();
        node_rows.sort_by_key(|r| r.time);
        let starts: Vec<usize> = (0..node_rows.len()).filter(|&k| node_rows[k].decision.is_some()).collect();
        let mut node_hits = 0u64;
        for (j, &k) in starts.iter().enumerate() {
            let at = node_rows[k];
            let (phase, green) = at.decision.expect("decision row");
            let end = starts.get(j + 1).copied().unwrap_or(node_rows.len());

            let counts = phase_vehicle_counts(&at.n_in, phases);
            for (p, c) in counts.iter().enumerate() {
                vehicle_sum[p] += c;
            }
            if phase < chosen.len() {
                chosen[phase] += 1;
            }
            if max_vehicle_phase(&counts) == Some(phase) {
                node_hits += 1;
            }

            let Some(def) = phases.get(phase) else { continue };
            let mut iv = GreenInterval {
                time: at.time,
                intersection: node,
                phase,
                green,
                n_in: [0; 2],
                ideal: [0; 2],
                actual: [0; 2],
            };
            for (slot, &m) in def.movements.iter().enumerate() {
                let n_in = at.n_in[m];
                let crossed: u32 = node_rows[k..end].iter().map(|r| r.discharged[m]).sum();
                iv.n_in[slot] = n_in;
                iv.ideal[slot] = n_pass(MovementCounts::new(n_in, at.n_out[m], at.out_capacity[m]));
                iv.actual[slot] = crossed.min(n_in);
            }
            intervals.push(iv);
        }
        if !starts.is_empty() {
            per_node.insert(node, node_hits as f64 / starts.len() as f64);
        }
        hits += node_hits;
    }

    let decisions: u64 = chosen.iter().sum();
    let phase_stats = (0..chosen.len())
        .map(|p| PhaseStat {
            phase: p,
            chosen: chosen[p],
            share: if decisions == 0 { 0.0 } else { chosen[p] as f64 / decisions as f64 },
            mean_vehicles: if decisions == 0 { 0.0 } else { vehicle_sum[p] / decisions as f64 },
        })
        .collect();
    let interval_violations = intervals.iter().filter(|iv| iv.actual_total() > iv.ideal_total()).count() as u64;
    let movement_violations = intervals
        .iter()
        .map(|iv| (0..2).filter(|&s| iv.actual[s] > iv.ideal[s]).count() as u64)
        .sum();

    CaseStudy {
        phases: phase_stats,
        intervals,
        summary: CaseStudySummary {
            decisions,
            max_vehicle_phase_frequency: (decisions > 0).then(|| hits as f64 / decisions as f64),
            per_intersection_frequency: per_node,
            interval_violations,
            movement_violations,
        },
    }
}

/// Writes `case_study.csv`, `green_trace.csv`, `passed_vs_green.csv` and
/// `case_study_summary.json` into `dir`.
pub fn write_case_study(dir: &Path, study: &CaseStudy) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;

    let mut w = csv::Writer::from_path(dir.join("case_study.csv"))?;
    w.write_record(["phase", "chosen", "share", "mean_vehicles"])?;
    for p in &study.phases {
        w.write_record([
            p.phase.to_string(),
            p.chosen.to_string(),
            format!("{:.6}", p.share),
            format!("{:.6}", p.mean_vehicles),
        ])?;
    }
    w.flush().map_err(|e| ExperimentError::io(dir, e))?;

    let mut w = csv::Writer::from_path(dir.join("green_trace.csv"))?;
    w.write_record(["time", "intersection", "phase", "green"])?;
    for iv in &study.intervals {
        w.write_record([
            iv.time.to_string(),
            iv.intersection.to_string(),
            iv.phase.to_string(),
            iv.green.to_string(),
        ])?;
    }
    w.flush().map_err(|e| ExperimentError::io(dir, e))?;

    let mut w = csv::Writer::from_path(dir.join("passed_vs_green.csv"))?;
    w.write_record([
        "time",
        "intersection",
        "phase",
        "green",
        "n_in_a",
        "n_in_b",
        "ideal_a",
        "ideal_b",
        "actual_a",
        "actual_b",
        "ideal",
        "actual",
    ])?;
    for iv in &study.intervals {
        w.write_record([
            iv.time.to_string(),
            iv.intersection.to_string(),
            iv.phase.to_string(),
            iv.green.to_string(),
            iv.n_in[0].to_string(),
            iv.n_in[1].to_string(),
            iv.ideal[0].to_string(),
            iv.ideal[1].to_string(),
            iv.actual[0].to_string(),
            iv.actual[1].to_string(),
            iv.ideal_total().to_string(),
            iv.actual_total().to_string(),
        ])?;
    }
    w.flush().map_err(|e| ExperimentError::io(dir, e))?;

    super::write_json(&dir.join("case_study_summary.json"), &study.summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::SignalMode;

    fn row(time: u32, decision: Option<(usize, u32)>, n_in: [u32; 12], discharged: [u32; 12]) -> TelemetryRow {
        TelemetryRow {
            time,
            intersection: 0,
            phase: decision.map_or(0, |d| d.0),
            mode: SignalMode::Green,
            decision,
            n_in,
            n_out: [0; 12],
            out_capacity: [40; 12],
            discharged,
        }
    }

    #[test]
    fn empty_telemetry_gives_empty_tables() {
        let s = case_study(&[]);
        assert!(s.intervals.is_empty());
        assert_eq!(s.summary.decisions, 0);
        assert_eq!(s.summary.max_vehicle_phase_frequency, None);
        assert!(s.phases.iter().all(|p| p.chosen == 0));
    }

    #[test]
    fn single_decision_on_the_max_phase() {
        // phase 1 = N/S straight = movements 7 and 10
        let mut n_in = [1; 12];
        n_in[7] = 9;
        n_in[10] = 5;
        let mut d = [0; 12];
        d[7] = 3;
        let rows = [row(0, Some((1, 10)), n_in, [0; 12]), row(1, None, n_in, d)];
        let s = case_study(&rows);
        assert_eq!(s.summary.max_vehicle_phase_frequency, Some(1.0));
        assert_eq!(s.intervals.len(), 1);
        assert_eq!(s.intervals[0].ideal, [9, 5]);
        assert_eq!(s.intervals[0].actual, [3, 0]);
        assert_eq!(s.phases[1].chosen, 1);
        assert_eq!(s.phases[1].mean_vehicles, 7.0);
        assert_eq!(s.summary.interval_violations, 0);
    }

    #[test]
    fn ties_go_to_lowest_phase() {
        assert_eq!(max_vehicle_phase(&[2.0, 2.0, 1.0, 0.0]), Some(0));
        assert_eq!(max_vehicle_phase(&[0.0, 3.0, 3.0, 0.0]), Some(1));
        assert_eq!(max_vehicle_phase(&[]), None);
    }

    #[test]
    fn interval_ends_at_next_decision() {
        let n_in = [4; 12];
        let mut d = [0; 12];
        d[1] = 2; // W straight, in phase 0
        let rows = [
            row(0, Some((0, 10)), n_in, d),
            row(1, None, n_in, d),
            row(2, Some((0, 10)), n_in, d),
        ];
        let s = case_study(&rows);
        assert_eq!(s.intervals.len(), 2);
        assert_eq!(s.intervals[0].actual[0], 4);
        assert_eq!(s.intervals[1].actual[0], 2);
    }
}
