//! Signal controllers: fixed cycle, max-pressure, greedy PRCOL and the DQN
//! policy, all answering "which phase next, and for how long".

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::Observation;
use crate::learner::{argmax, DqnLearner, LearnerError, QNetwork};
use crate::netmodel::{IntersectionId, Phase, RoadNetwork, MOVEMENTS_PER_INTERSECTION, PHASE_COUNT};
use crate::signalmath::{
    green_duration, phase_score, reward, KinematicParams, MovementCounts, RewardKind, ScoreMetric, SignalMathError,
};

type Counts = [MovementCounts; MOVEMENTS_PER_INTERSECTION];

#[derive(Debug, Error)]
pub enum ControlError {
    #[error(transparent)]
    Math(#[from] SignalMathError),
    #[error(transparent)]
    Learner(#[from] LearnerError),
    #[error("epsilon must lie in [0, 1], got {0}")]
    Epsilon(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub phase: usize,
    pub green: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControllerKind {
    Fixed,
    #[serde(rename = "maxpressure")]
    MaxPressure,
    GreedyPrcol,
    Dqn,
}

impl std::fmt::Display for ControllerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ControllerKind::Fixed => "fixed",
            ControllerKind::MaxPressure => "maxpressure",
            ControllerKind::GreedyPrcol => "greedy_prcol",
            ControllerKind::Dqn => "dqn",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DurationMode {
    #[default]
    Fixed,
    Dynamic,
}

/// How long a chosen phase stays green.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DurationPolicy {
    pub mode: DurationMode,
    pub fixed: u32,
    pub min: u32,
    pub max: u32,
}

impl Default for DurationPolicy {
    fn default() -> Self {
        DurationPolicy {
            mode: DurationMode::Fixed,
            fixed: 10,
            min: 10,
            max: 20,
        }
    }
}

impl DurationPolicy {
    pub fn fixed(seconds: u32) -> Self {
        DurationPolicy {
            fixed: seconds,
            ..Default::default()
        }
    }

    pub fn dynamic(min: u32, max: u32) -> Self {
        DurationPolicy {
            mode: DurationMode::Dynamic,
            min,
            max,
            ..Default::default()
        }
    }

    pub fn green_for(&self, phase: &Phase, counts: &Counts, k: &KinematicParams) -> u32 {
        match self.mode {
            DurationMode::Fixed => self.fixed,
            DurationMode::Dynamic => {
                let pc = phase.movements.map(|m| counts[m]);
                green_duration(&pc, k, self.min, self.max)
            }
        }
    }
}

/// Phase of the `k`-th decision of a fixed cycle 0, 1, 2, 3, 0, ...
pub fn decide_fixed(k: usize, green: u32) -> Decision {
    Decision {
        phase: k % PHASE_COUNT,
        green,
    }
}

/// Highest-scoring phase; the lowest index wins ties.
pub fn best_phase(counts: &Counts, phases: &[Phase], metric: ScoreMetric) -> Result<usize, SignalMathError> {
    let scores = phases
        .iter()
        .map(|p| phase_score(counts, p, metric))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(argmax(&scores))
}

pub fn decide_maxpressure(counts: &Counts, phases: &[Phase], green: u32) -> Result<Decision, SignalMathError> {
    Ok(Decision {
        phase: best_phase(counts, phases, ScoreMetric::Pressure)?,
        green,
    })
}

pub fn decide_greedy_prcol(
    counts: &Counts,
    phases: &[Phase],
    duration: &DurationPolicy,
    k: &KinematicParams,
) -> Result<Decision, SignalMathError> {
    let phase = best_phase(counts, phases, ScoreMetric::Prcol)?;
    Ok(Decision {
        phase,
        green: duration.green_for(&phases[phase], counts, k),
    })
}

/// ε-greedy phase choice from the Q-network; `green_of` supplies the
/// duration for the chosen phase.
pub fn decide_dqn<R: Rng + ?Sized>(
    net: &QNetwork,
    features: &[f64],
    eps: f64,
    rng: &mut R,
    green_of: impl FnOnce(usize) -> u32,
) -> Result<Decision, ControlError> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(ControlError::Epsilon(eps));
    }
    let phase = if eps > 0.0 && rng.gen_bool(eps) {
        rng.gen_range(0..net.output_width())
    } else {
        argmax(&net.forward(features)?)
    };
    Ok(Decision {
        phase,
        green: green_of(phase),
    })
}

pub fn reward_of(counts_after: &Counts, kind: RewardKind) -> Result<f64, SignalMathError> {
    reward(counts_after, kind)
}

/// What a controller sees at a decision instant.
pub struct DecisionInput<'a> {
    pub intersection: IntersectionId,
    pub observation: &'a Observation,
    pub counts: &'a Counts,
    pub phases: &'a [Phase],
}

#[derive(Debug, Clone)]
pub struct DqnController {
    pub learner: DqnLearner,
    pub epsilon: f64,
    pub duration: DurationPolicy,
    pub reward_kind: RewardKind,
    /// Multiplies raw rewards before they are stored.
    pub reward_scale: f64,
    /// Per intersection, divisors applied to the observation (incoming-lane
    /// capacities, then 1 for the phase one-hot).
    input_scale: Vec<[f64; MOVEMENTS_PER_INTERSECTION + PHASE_COUNT]>,
}

impl DqnController {
    pub fn new(
        learner: DqnLearner,
        net: &RoadNetwork,
        duration: DurationPolicy,
        reward_kind: RewardKind,
        reward_scale: f64,
    ) -> Self {
        let input_scale = net
            .intersections
            .iter()
            .map(|inter| {
                std::array::from_fn(|k| {
                    if k < MOVEMENTS_PER_INTERSECTION {
                        f64::from(net.lane(inter.incoming_lanes[k]).capacity)
                    } else {
                        1.0
                    }
                })
            })
            .collect();
        DqnController {
            learner,
            epsilon: 0.0,
            duration,
            reward_kind,
            reward_scale,
            input_scale,
        }
    }

    /// Network input for an intersection: lane counts as a fraction of lane
    /// capacity, then the phase one-hot.
    pub fn features(&self, i: IntersectionId, obs: &Observation) -> Vec<f64> {
        obs.iter().zip(&self.input_scale[i.0]).map(|(o, s)| o / s).collect()
    }

    pub fn scaled_reward(&self, counts_after: &Counts) -> Result<f64, SignalMathError> {
        Ok(reward_of(counts_after, self.reward_kind)? * self.reward_scale)
    }
}

/// A controller for every intersection of one run.
#[derive(Debug, Clone)]
pub enum Controller {
    FixedTime { green: u32, decisions: Vec<usize> },
    MaxPressure { green: u32 },
    GreedyPrcol { duration: DurationPolicy },
    Dqn(Box<DqnController>),
}

impl Controller {
    pub fn fixed_time(intersections: usize, green: u32) -> Self {
        Controller::FixedTime {
            green,
            decisions: vec![0; intersections],
        }
    }

    pub fn kind(&self) -> ControllerKind {
        match self {
            Controller::FixedTime { .. } => ControllerKind::Fixed,
            Controller::MaxPressure { .. } => ControllerKind::MaxPressure,
            Controller::GreedyPrcol { .. } => ControllerKind::GreedyPrcol,
            Controller::Dqn(_) => ControllerKind::Dqn,
        }
    }

    pub fn as_dqn(&self) -> Option<&DqnController> {
        match self {
            Controller::Dqn(d) => Some(d),
            _ => None,
        }
    }

    pub fn as_dqn_mut(&mut self) -> Option<&mut DqnController> {
        match self {
            Controller::Dqn(d) => Some(d),
            _ => None,
        }
    }

    pub fn decide<R: Rng + ?Sized>(
        &mut self,
        input: &DecisionInput<'_>,
        k: &KinematicParams,
        rng: &mut R,
    ) -> Result<Decision, ControlError> {
        Ok(match self {
            Controller::FixedTime { green, decisions } => {
                let n = &mut decisions[input.intersection.0];
                let d = decide_fixed(*n, *green);
                *n += 1;
                d
            }
            Controller::MaxPressure { green } => decide_maxpressure(input.counts, input.phases, *green)?,
            Controller::GreedyPrcol { duration } => decide_greedy_prcol(input.counts, input.phases, duration, k)?,
            Controller::Dqn(d) => {
                let features = d.features(input.intersection, input.observation);
                let duration = d.duration;
                decide_dqn(&d.learner.online, &features, d.epsilon, rng, |p| {
                    duration.green_for(&input.phases[p], input.counts, k)
                })?
            }
        })
    }
}
