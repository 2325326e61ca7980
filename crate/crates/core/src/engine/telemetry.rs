//! Per-step, per-intersection telemetry rows and their CSV form.
//!
//! Column order: `time, intersection, phase, mode, decision_phase,
//! decision_green`, then `in_0..in_11`, `out_0..out_11`, `cap_0..cap_11` and
//! `discharged_0..discharged_11`, each block in local movement order. Counts
//! are taken at the start of the tick (the decision instant); phase, mode and
//! discharges describe the tick itself. The decision columns are empty unless
//! a decision was applied at that instant.

use std::io;
use std::path::Path;
use std::sync::Arc;

use super::{SignalMode, StepTelemetry, World};
use crate::netmodel::{RoadNetwork, MOVEMENTS_PER_INTERSECTION};

const M: usize = MOVEMENTS_PER_INTERSECTION;

pub const TELEMETRY_HEADER: [&str; 6] = ["time", "intersection", "phase", "mode", "decision_phase", "decision_green"];

#[derive(Debug, Clone, PartialEq)]
pub struct TelemetryRow {
    pub time: u32,
    pub intersection: usize,
    pub phase: usize,
    pub mode: SignalMode,
    /// `(phase, green seconds)` chosen at `time`.
    pub decision: Option<(usize, u32)>,
    pub n_in: [u32; M],
    pub n_out: [u32; M],
    pub out_capacity: [u32; M],
    pub discharged: [u32; M],
}

/// Turns the engine's per-step output into telemetry rows.
pub struct TelemetryRecorder {
    net: Arc<RoadNetwork>,
    occupancy: Vec<u32>,
    rows: Vec<TelemetryRow>,
}

impl TelemetryRecorder {
    pub fn new(world: &World) -> Self {
        TelemetryRecorder {
            net: world.network().clone(),
            occupancy: world.lane_occupancies(),
            rows: Vec::new(),
        }
    }

    /// `decisions[i]` is the decision intersection `i` received just before
    /// the step.
    pub fn record(&mut self, step: &StepTelemetry, decisions: &[Option<(usize, u32)>]) {
        for (i, inter) in self.net.intersections.iter().enumerate() {
            let (phase, mode) = step.signals[i];
            self.rows.push(TelemetryRow {
                time: step.time,
                intersection: i,
                phase,
                mode,
                decision: decisions.get(i).copied().flatten(),
                n_in: std::array::from_fn(|k| self.occupancy[inter.incoming_lanes[k].0]),
                n_out: std::array::from_fn(|k| self.occupancy[inter.outgoing_lanes[k].0]),
                out_capacity: std::array::from_fn(|k| self.net.lane(inter.outgoing_lanes[k]).capacity),
                discharged: std::array::from_fn(|k| step.discharged[i * M + k]),
            });
        }
        self.occupancy.clone_from(&step.occupancy);
    }

    pub fn rows(&self) -> &[TelemetryRow] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<TelemetryRow> {
        self.rows
    }
}

fn header() -> Vec<String> {
    let mut h: Vec<String> = TELEMETRY_HEADER.iter().map(|s| s.to_string()).collect();
    for block in ["in", "out", "cap", "discharged"] {
        h.extend((0..M).map(|k| format!("{block}_{k}")));
    }
    h
}

pub fn write_telemetry<W: io::Write>(out: W, rows: &[TelemetryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header())?;
    let mut rec: Vec<String> = Vec::with_capacity(TELEMETRY_HEADER.len() + 4 * M);
    for r in rows {
        rec.clear();
        rec.push(r.time.to_string());
        rec.push(r.intersection.to_string());
        rec.push(r.phase.to_string());
        rec.push(r.mode.to_string());
        match r.decision {
            Some((p, g)) => {
                rec.push(p.to_string());
                rec.push(g.to_string());
            }
            None => {
                rec.push(String::new());
                rec.push(String::new());
            }
        }
        for block in [&r.n_in, &r.n_out, &r.out_capacity, &r.discharged] {
            rec.extend(block.iter().map(|c| c.to_string()));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

impl TelemetryRow {
    pub fn write_csv(path: impl AsRef<Path>, rows: &[TelemetryRow]) -> csv::Result<()> {
        write_telemetry(std::fs::File::create(path)?, rows)
    }
}

fn bad(line: u64, what: &str) -> csv::Error {
    csv::Error::from(io::Error::new(
        io::ErrorKind::InvalidData,
        format!("telemetry line {line}: {what}"),
    ))
}

pub fn read_telemetry(path: impl AsRef<Path>) -> csv::Result<Vec<TelemetryRow>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != header() {
        return Err(bad(1, "unexpected header"));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> csv::Result<u32> { rec[i].parse().map_err(|_| bad(line, &format!("column {i}"))) };
        let block = |b: usize| -> csv::Result<[u32; M]> {
            let mut out = [0; M];
            for (k, slot) in out.iter_mut().enumerate() {
                *slot = num(TELEMETRY_HEADER.len() + b * M + k)?;
            }
            Ok(out)
        };
        let mode = match &rec[3] {
            "green" => SignalMode::Green,
            "yellow" => SignalMode::Yellow,
            _ => return Err(bad(line, "mode")),
        };
        let decision = if rec[4].is_empty() {
            None
        } else {
            Some((num(4)? as usize, num(5)?))
        };
        rows.push(TelemetryRow {
            time: num(0)?,
            intersection: num(1)? as usize,
            phase: num(2)? as usize,
            mode,
            decision,
            n_in: block(0)?,
            n_out: block(1)?,
            out_capacity: block(2)?,
            discharged: block(3)?,
        });
    }
    Ok(rows)
}
