//! Experiment harness: configs, episodes, training, evaluation, comparison
//! and the case-study tables derived from telemetry.

mod artifacts;
mod casestudy;
mod config;
mod episode;
mod metrics;
mod train;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

pub use artifacts::{read_curve, write_curve, write_seed_run, write_telemetry_file, write_trained_seed, Timing};
pub use casestudy::{
    case_study, case_study_with, max_vehicle_phase, phase_vehicle_counts, write_case_study, CaseStudy,
    CaseStudySummary, GreenInterval, PhaseStat,
};
pub use config::{ControllerConfig, ExperimentConfig, FlowSource, RoadnetSource, Scenario};
pub use episode::{run_episode, EpisodeOptions, EpisodeOutcome};
pub use metrics::{avg_travel_time, median, throughput, EpisodeMetrics, MetricsReport, SeedMetrics};
pub use train::{
    compare, evaluate, greedy_episode, label, per_seed, render_table, run_seed, train, train_seed, CurveRow,
    SeedRun, TrainReport, TrainedSeed,
};

use crate::control::ControlError;
use crate::engine::EngineError;
use crate::flows::FlowError;
use crate::learner::LearnerError;
use crate::netmodel::NetError;
use crate::signalmath::SignalMathError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("config: {0}")]
    Config(String),
    #[error("controller {0} does not learn")]
    NotLearning(String),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Math(#[from] SignalMathError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl ExperimentError {
    pub fn io(path: impl AsRef<Path>, source: io::Error) -> Self {
        ExperimentError::Io {
            path: path.as_ref().to_path_buf(),
            source,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| ExperimentError::io(path, e))
}
