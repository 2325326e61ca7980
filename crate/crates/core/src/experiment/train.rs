use std::thread;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{rng_for, Stream};
use super::episode::{run_episode, EpisodeOptions, EpisodeOutcome};
use super::metrics::{EpisodeMetrics, MetricsReport, SeedMetrics};
use super::{ExperimentConfig, ExperimentError, Scenario};
use crate::control::ControllerKind;
use crate::engine::TelemetryRow;
use crate::learner::QNetwork;

/// One row of `learning_curve.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub episode: usize,
    pub epsilon: f64,
    pub train_average_travel_time: f64,
    pub train_throughput: u64,
    pub eval_average_travel_time: f64,
    pub eval_throughput: u64,
    pub mean_loss: Option<f64>,
    pub train_steps: u64,
}

#[derive(Debug, Clone)]
pub struct TrainedSeed {
    pub seed: u64,
    pub curve: Vec<CurveRow>,
    /// Parameters with the lowest greedy-evaluation travel time.
    pub best: QNetwork,
    pub best_episode: usize,
    pub last: QNetwork,
    /// Greedy evaluation of `last`.
    pub final_eval: EpisodeMetrics,
}

/// Deterministic greedy rollout of fixed parameters.
pub fn greedy_episode(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    params: QNetwork,
    record_telemetry: bool,
) -> Result<EpisodeOutcome, ExperimentError> {
    if cfg.controller.kind != ControllerKind::Dqn {
        return Err(ExperimentError::NotLearning(cfg.controller.kind.to_string()));
    }
    let mut controller = cfg.controller(scenario, 0, Some(params))?;
    // epsilon stays 0, so neither stream is consumed
    let mut rng = rng_for(0, Stream::Explore);
    let mut unused = rng_for(0, Stream::Replay);
    run_episode(
        scenario,
        &mut controller,
        EpisodeOptions {
            learning: false,
            record_telemetry,
        },
        &mut rng,
        &mut unused,
    )
}

/// Trains one seed for `cfg.train_episodes` episodes, evaluating the greedy
/// policy after every episode.
pub fn train_seed(cfg: &ExperimentConfig, scenario: &Scenario, seed: u64) -> Result<TrainedSeed, ExperimentError> {
    if cfg.controller.kind != ControllerKind::Dqn {
        return Err(ExperimentError::NotLearning(cfg.controller.kind.to_string()));
    }
    let mut controller = cfg.controller(scenario, seed, None)?;
    let mut explore = rng_for(seed, Stream::Explore);
    let mut replay = rng_for(seed, Stream::Replay);
    let schedule = cfg.epsilon_schedule();
    let mut curve = Vec::with_capacity(cfg.train_episodes);
    let mut best: Option<(f64, usize, QNetwork)> = None;
    let mut last_eval = None;

    for episode in 0..cfg.train_episodes {
        let epsilon = schedule.epsilon(episode);
        controller.as_dqn_mut().expect("dqn controller").epsilon = epsilon;
        let train = run_episode(
            scenario,
            &mut controller,
            EpisodeOptions {
                learning: true,
                record_telemetry: false,
            },
            &mut explore,
            &mut replay,
        )?;
        let params = controller.as_dqn().expect("dqn controller").learner.online.clone();
        let eval = greedy_episode(cfg, scenario, params.clone(), false)?.metrics;
        info!(
            "{} seed {seed} episode {episode}: eps {epsilon:.3} train att {:.2} eval att {:.2} thr {}",
            cfg.name, train.metrics.average_travel_time, eval.average_travel_time, eval.throughput
        );
        if best.as_ref().map_or(true, |(att, _, _)| eval.average_travel_time < *att) {
            best = Some((eval.average_travel_time, episode, params));
        }
        curve.push(CurveRow {
            episode,
            epsilon,
            train_average_travel_time: train.metrics.average_travel_time,
            train_throughput: train.metrics.throughput,
            eval_average_travel_time: eval.average_travel_time,
            eval_throughput: eval.throughput,
            mean_loss: train.mean_loss,
            train_steps: train.train_steps,
        });
        last_eval = Some(eval);
    }
    let (_, best_episode, best) = best.expect("at least one episode");
    Ok(TrainedSeed {
        seed,
        curve,
        best,
        best_episode,
        last: controller.as_dqn().expect("dqn controller").learner.online.clone(),
        final_eval: last_eval.expect("at least one episode"),
    })
}

/// Runs `f` for every seed on its own thread and returns results in seed order.
pub fn per_seed<T: Send>(
    seeds: &[u64],
    f: impl Fn(u64) -> Result<T, ExperimentError> + Sync,
) -> Result<Vec<T>, ExperimentError> {
    if seeds.len() == 1 {
        return Ok(vec![f(seeds[0])?]);
    }
    let f = &f;
    thread::scope(|scope| {
        let handles: Vec<_> = seeds.iter().map(|&s| scope.spawn(move || f(s))).collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|p| std::panic::resume_unwind(p)))
            .collect()
    })
}

pub struct TrainReport {
    pub report: MetricsReport,
    pub seeds: Vec<TrainedSeed>,
}

/// Trains every configured seed; the report holds each seed's final greedy
/// evaluation.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainReport, ExperimentError> {
    let scenario = cfg.scenario()?;
    let seeds = per_seed(&cfg.seeds, |seed| train_seed(cfg, &scenario, seed))?;
    let per = seeds
        .iter()
        .map(|s| SeedMetrics {
            seed: s.seed,
            metrics: s.final_eval,
        })
        .collect();
    Ok(TrainReport {
        report: MetricsReport::new(&cfg.name, &label(cfg), &cfg.fingerprint(), per),
        seeds,
    })
}

/// Greedy evaluation of given parameters; the policy is deterministic, so
/// one episode stands for every seed.
pub fn evaluate(
    cfg: &ExperimentConfig,
    params: QNetwork,
) -> Result<(MetricsReport, Vec<TelemetryRow>), ExperimentError> {
    let scenario = cfg.scenario()?;
    let out = greedy_episode(cfg, &scenario, params, true)?;
    let per = vec![SeedMetrics {
        seed: cfg.seeds[0],
        metrics: out.metrics,
    }];
    Ok((
        MetricsReport::new(&cfg.name, &label(cfg), &cfg.fingerprint(), per),
        out.telemetry.unwrap_or_default(),
    ))
}

pub struct SeedRun {
    pub metrics: SeedMetrics,
    pub telemetry: Option<Vec<TelemetryRow>>,
    pub trained: Option<TrainedSeed>,
}

/// One seed end to end: a single episode for rule-based controllers; for the
/// DQN controller, training followed by a greedy episode of the final
/// parameters.
pub fn run_seed(
    cfg: &ExperimentConfig,
    scenario: &Scenario,
    seed: u64,
    record_telemetry: bool,
) -> Result<SeedRun, ExperimentError> {
    if cfg.controller.kind == ControllerKind::Dqn {
        let trained = train_seed(cfg, scenario, seed)?;
        let out = greedy_episode(cfg, scenario, trained.last.clone(), record_telemetry)?;
        return Ok(SeedRun {
            metrics: SeedMetrics {
                seed,
                metrics: out.metrics,
            },
            telemetry: out.telemetry,
            trained: Some(trained),
        });
    }
    let mut controller = cfg.controller(scenario, seed, None)?;
    let out = run_episode(
        scenario,
        &mut controller,
        EpisodeOptions {
            learning: false,
            record_telemetry,
        },
        &mut rng_for(seed, Stream::Explore),
        &mut rng_for(seed, Stream::Replay),
    )?;
    Ok(SeedRun {
        metrics: SeedMetrics {
            seed,
            metrics: out.metrics,
        },
        telemetry: out.telemetry,
        trained: None,
    })
}

/// Human-readable controller label, e.g. `dqn/prcol/dynamic`.
pub fn label(cfg: &ExperimentConfig) -> String {
    let c = &cfg.controller;
    let duration = match c.duration {
        crate::control::DurationMode::Fixed => format!("fixed{}", c.fixed_green),
        crate::control::DurationMode::Dynamic => format!("dynamic{}-{}", c.min_green, c.max_green),
    };
    match c.kind {
        ControllerKind::Dqn => format!("dqn/{}/{duration}", c.reward),
        ControllerKind::GreedyPrcol => format!("greedy_prcol/{duration}"),
        ControllerKind::Fixed => format!("fixed/{}s", c.fixed_green),
        ControllerKind::MaxPressure => format!("maxpressure/{}s", c.fixed_green),
    }
}

/// Runs every config over its seeds and reports each one.
pub fn compare(cfgs: &[ExperimentConfig]) -> Result<Vec<MetricsReport>, ExperimentError> {
    cfgs.iter()
        .map(|cfg| {
            let scenario = cfg.scenario()?;
            let runs = per_seed(&cfg.seeds, |seed| Ok(run_seed(cfg, &scenario, seed, false)?.metrics))?;
            Ok(MetricsReport::new(&cfg.name, &label(cfg), &cfg.fingerprint(), runs))
        })
        .collect()
}

/// Plain-text table, one row per report.
pub fn render_table(reports: &[MetricsReport]) -> String {
    let name_w = reports.iter().map(|r| r.name.len()).max().unwrap_or(4).max(6);
    let ctl_w = reports.iter().map(|r| r.controller.len()).max().unwrap_or(10).max(10);
    let mut out = format!(
        "{:<name_w$}  {:<ctl_w$}  {:>12}  {:>10}  {}\n",
        "config", "controller", "travel time", "throughput", "per-seed travel time"
    );
    out.push_str(&"-".repeat(name_w + ctl_w + 50));
    out.push('\n');
    for r in reports {
        let seeds: Vec<String> = r
            .per_seed
            .iter()
            .map(|s| format!("{:.2}", s.metrics.average_travel_time))
            .collect();
        out.push_str(&format!(
            "{:<name_w$}  {:<ctl_w$}  {:>12.2}  {:>10.1}  {}\n",
            r.name,
            r.controller,
            r.average_travel_time,
            r.throughput,
            seeds.join(" ")
        ));
    }
    out
}
