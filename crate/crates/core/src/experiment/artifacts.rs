use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::{CurveRow, SeedRun, TrainedSeed};
use super::ExperimentError;
use crate::engine::TelemetryRow;
use crate::learner::checkpoint;

/// Wall-clock cost of a command, kept apart from `metrics.json` so that the
/// latter stays byte-reproducible.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Timing {
    pub command: String,
    pub wall_clock_seconds: f64,
}

pub fn write_curve(path: &Path, rows: &[CurveRow]) -> Result<(), ExperimentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| ExperimentError::io(path, e))
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveRow>, ExperimentError> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// `learning_curve.csv`, `checkpoint_best.txt` and `checkpoint_final.txt`.
pub fn write_trained_seed(dir: &Path, trained: &TrainedSeed) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    write_curve(&dir.join("learning_curve.csv"), &trained.curve)?;
    checkpoint::save(&trained.best, dir.join("checkpoint_best.txt"))?;
    checkpoint::save(&trained.last, dir.join("checkpoint_final.txt"))?;
    Ok(())
}

/// Telemetry (if recorded) plus training outputs (if any).
pub fn write_seed_run(dir: &Path, run: &SeedRun) -> Result<(), ExperimentError> {
    fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    if let Some(rows) = &run.telemetry {
        write_telemetry_file(&dir.join("telemetry.csv"), rows)?;
    }
    if let Some(trained) = &run.trained {
        write_trained_seed(dir, trained)?;
    }
    Ok(())
}

pub fn write_telemetry_file(path: &Path, rows: &[TelemetryRow]) -> Result<(), ExperimentError> {
    Ok(TelemetryRow::write_csv(path, rows)?)
}
