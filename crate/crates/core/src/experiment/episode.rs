use rand::Rng;

use super::metrics::EpisodeMetrics;
use super::{ExperimentError, Scenario};
use crate::control::{Controller, DecisionInput};
use crate::engine::{TelemetryRecorder, TelemetryRow, World};
use crate::learner::Transition;
use crate::netmodel::IntersectionId;

#[derive(Debug, Clone, Copy, Default)]
pub struct EpisodeOptions {
    /// Store transitions and train the DQN controller while driving.
    pub learning: bool,
    pub record_telemetry: bool,
}

#[derive(Debug, Clone)]
pub struct EpisodeOutcome {
    pub metrics: EpisodeMetrics,
    pub telemetry: Option<Vec<TelemetryRow>>,
    pub decisions: usize,
    pub train_steps: u64,
    /// Mean loss over this episode's train steps.
    pub mean_loss: Option<f64>,
}

/// Drives one episode of `scenario.horizon` seconds. Each intersection is
/// asked for a decision whenever its green runs out; with learning on, the
/// reward for an intersection's previous action is measured at that moment
/// and the transition is stored. Training happens after all of a tick's
/// decisions, once per stored transition. Transitions still open at the
/// horizon are stored as terminal.
pub fn run_episode<R: Rng + ?Sized, S: Rng + ?Sized>(
    scenario: &Scenario,
    controller: &mut Controller,
    options: EpisodeOptions,
    explore_rng: &mut R,
    replay_rng: &mut S,
) -> Result<EpisodeOutcome, ExperimentError> {
    if options.learning && controller.as_dqn().is_none() {
        return Err(ExperimentError::NotLearning(controller.kind().to_string()));
    }
    let net = scenario.net.clone();
    let n = net.intersections.len();
    let mut world = World::new(net.clone(), scenario.schedule.clone(), scenario.kin, scenario.yellow)?;
    let mut recorder = options.record_telemetry.then(|| TelemetryRecorder::new(&world));

    let mut open: Vec<Option<(Vec<f64>, usize)>> = vec![None; n];
    let mut fresh: Vec<Transition> = Vec::new();
    let mut decided: Vec<Option<(usize, u32)>> = vec![None; n];
    let mut decisions = 0;
    let mut losses = (0.0, 0u64);

    for _ in 0..scenario.horizon {
        decided.iter_mut().for_each(|d| *d = None);
        for i in 0..n {
            let id = IntersectionId(i);
            if !world.needs_decision(id) {
                continue;
            }
            let obs = world.observe(id, scenario.count_mode)?;
            let counts = world.movement_counts(id, scenario.count_mode)?;
            let features = match controller.as_dqn() {
                Some(dqn) if options.learning => {
                    let f = dqn.features(id, &obs);
                    if let Some((s, a)) = open[i].take() {
                        fresh.push(Transition {
                            s,
                            a,
                            r: dqn.scaled_reward(&counts)?,
                            s_next: f.clone(),
                            terminal: false,
                        });
                    }
                    Some(f)
                }
                _ => None,
            };
            let input = DecisionInput {
                intersection: id,
                observation: &obs,
                counts: &counts,
                phases: &net.intersections[i].phases,
            };
            let d = controller.decide(&input, &scenario.kin, explore_rng)?;
            world.apply_decision(id, d.phase, d.green)?;
            if let Some(f) = features {
                open[i] = Some((f, d.phase));
            }
            decided[i] = Some((d.phase, d.green));
            decisions += 1;
        }
        if !fresh.is_empty() {
            train_on(controller, &mut fresh, replay_rng, &mut losses)?;
        }
        let step = world.step(1.0)?;
        if let Some(rec) = recorder.as_mut() {
            rec.record(&step, &decided);
        }
    }

    if options.learning {
        let dqn = controller.as_dqn().expect("checked above");
        for (i, slot) in open.iter_mut().enumerate() {
            if let Some((s, a)) = slot.take() {
                let id = IntersectionId(i);
                let obs = world.observe(id, scenario.count_mode)?;
                let counts = world.movement_counts(id, scenario.count_mode)?;
                fresh.push(Transition {
                    s,
                    a,
                    r: dqn.scaled_reward(&counts)?,
                    s_next: dqn.features(id, &obs),
                    terminal: true,
                });
            }
        }
        train_on(controller, &mut fresh, replay_rng, &mut losses)?;
    }

    let train_steps = controller.as_dqn().map_or(0, |d| d.learner.train_steps());
    Ok(EpisodeOutcome {
        metrics: EpisodeMetrics::from_vehicles(world.vehicles(), f64::from(scenario.horizon)),
        telemetry: recorder.map(TelemetryRecorder::into_rows),
        decisions,
        train_steps,
        mean_loss: (losses.1 > 0).then(|| losses.0 / losses.1 as f64),
    })
}

fn train_on<S: Rng + ?Sized>(
    controller: &mut Controller,
    fresh: &mut Vec<Transition>,
    rng: &mut S,
    losses: &mut (f64, u64),
) -> Result<(), ExperimentError> {
    let dqn = controller.as_dqn_mut().expect("learning controller");
    for t in fresh.drain(..) {
        dqn.learner.store(t);
        if let Some(loss) = dqn.learner.train_if_ready(rng)? {
            losses.0 += loss;
            losses.1 += 1;
        }
    }
    Ok(())
}
