use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::control::{Controller, ControllerKind, DqnController, DurationMode, DurationPolicy};
use crate::engine::{CountMode, DEFAULT_YELLOW};
use crate::flows::{gen_syn_heavy, gen_syn_light, load_flow_file, SpawnEvent};
use crate::learner::{DqnHyper, DqnLearner, EpsilonSchedule, QNetwork, DEFAULT_LAYERS};
use crate::netmodel::{build_grid, load_roadnet, RoadNetwork};
use crate::signalmath::{KinematicParams, RewardKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RoadnetSource {
    Grid {
        rows: usize,
        cols: usize,
        #[serde(default = "default_link")]
        we_length: f64,
        #[serde(default = "default_link")]
        ns_length: f64,
    },
    File {
        path: PathBuf,
    },
}

fn default_link() -> f64 {
    300.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowSource {
    SynLight,
    SynHeavy,
    File { path: PathBuf },
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    pub kind: ControllerKind,
    /// Only used by the DQN controller.
    pub reward: RewardKind,
    pub duration: DurationMode,
    pub fixed_green: u32,
    pub min_green: u32,
    pub max_green: u32,
    /// Counts fed to observations and rewards.
    pub count_mode: CountMode,
    /// Rewards are multiplied by this before they reach the replay memory.
    pub reward_scale: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            kind: ControllerKind::Fixed,
            reward: RewardKind::Prcol,
            duration: DurationMode::Fixed,
            fixed_green: 10,
            min_green: 10,
            max_green: 20,
            count_mode: CountMode::Total,
            reward_scale: 0.025,
        }
    }
}

impl ControllerConfig {
    pub fn duration_policy(&self) -> DurationPolicy {
        DurationPolicy {
            mode: self.duration,
            fixed: self.fixed_green,
            min: self.min_green,
            max: self.max_green,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub roadnet: RoadnetSource,
    pub flow: FlowSource,
    pub controller: ControllerConfig,
    /// Episode length T, seconds.
    pub episode_length: u32,
    pub train_episodes: usize,
    pub gamma: f64,
    pub lr: f64,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub sync_every: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub yellow: u32,
    pub kinematics: KinematicParams,
    pub layers: Vec<usize>,
    pub seeds: Vec<u64>,
    /// Directory relative paths are resolved against; set by [`ExperimentConfig::load`].
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "experiment".into(),
            roadnet: RoadnetSource::Grid {
                rows: 3,
                cols: 3,
                we_length: 300.0,
                ns_length: 300.0,
            },
            flow: FlowSource::SynLight,
            controller: ControllerConfig::default(),
            episode_length: 3600,
            train_episodes: 100,
            gamma: 0.8,
            lr: 0.001,
            buffer_capacity: 10_000,
            batch_size: 32,
            sync_every: 5,
            epsilon_start: 0.8,
            epsilon_end: 0.2,
            yellow: DEFAULT_YELLOW,
            kinematics: KinematicParams::default(),
            layers: DEFAULT_LAYERS.to_vec(),
            seeds: vec![0, 1, 2],
            base_dir: PathBuf::new(),
        }
    }
}

/// Everything an episode needs besides the controller.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub net: Arc<RoadNetwork>,
    pub schedule: Vec<SpawnEvent>,
    pub kin: KinematicParams,
    pub yellow: u32,
    pub horizon: u32,
    pub count_mode: CountMode,
}

/// Independent random streams derived from one seed.
pub(crate) enum Stream {
    Init = 1,
    Explore = 2,
    Replay = 3,
}

pub(crate) fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| ExperimentError::Config(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let mut problems = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                problems.push(msg.to_string());
            }
        };
        need(self.episode_length > 0, "episode_length must be positive");
        need(self.train_episodes > 0, "train_episodes must be positive");
        need((0.0..=1.0).contains(&self.gamma), "gamma must lie in [0, 1]");
        need(self.lr.is_finite() && self.lr > 0.0, "lr must be positive");
        need(self.buffer_capacity > 0, "buffer_capacity must be positive");
        need(self.batch_size > 0, "batch_size must be positive");
        need(self.batch_size < self.buffer_capacity, "batch_size must be below buffer_capacity");
        need(self.sync_every > 0, "sync_every must be positive");
        need(
            (0.0..=1.0).contains(&self.epsilon_start) && (0.0..=1.0).contains(&self.epsilon_end),
            "epsilon bounds must lie in [0, 1]",
        );
        need(self.epsilon_start >= self.epsilon_end, "epsilon_start must not be below epsilon_end");
        need(self.kinematics.validate().is_ok(), "kinematic parameters must be positive");
        need(!self.seeds.is_empty(), "at least one seed is required");
        need(
            self.layers.len() >= 2 && self.layers[0] == 16 && *self.layers.last().unwrap() == 4,
            "layers must start at 16 inputs and end at 4 outputs",
        );
        need(!self.layers.contains(&0), "layer sizes must be positive");
        let c = &self.controller;
        need(c.fixed_green > 0, "fixed_green must be positive");
        need(c.min_green > 0, "min_green must be positive");
        need(c.min_green <= c.max_green, "min_green must not exceed max_green");
        need(c.reward_scale.is_finite() && c.reward_scale > 0.0, "reward_scale must be positive");
        if let RoadnetSource::Grid {
            rows,
            cols,
            we_length,
            ns_length,
        } = &self.roadnet
        {
            need(*rows > 0 && *cols > 0, "grid dimensions must be positive");
            need(*we_length > 0.0 && *ns_length > 0.0, "grid link lengths must be positive");
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(ExperimentError::Config(problems.join("; ")))
        }
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn network(&self) -> Result<RoadNetwork, ExperimentError> {
        let k = &self.kinematics;
        Ok(match &self.roadnet {
            RoadnetSource::Grid {
                rows,
                cols,
                we_length,
                ns_length,
            } => build_grid(*rows, *cols, *we_length, *ns_length, k.vehicle_length, k.min_gap, k.max_speed)?,
            RoadnetSource::File { path } => load_roadnet(self.resolve(path), k.vehicle_length, k.min_gap)?,
        })
    }

    pub fn scenario(&self) -> Result<Scenario, ExperimentError> {
        self.validate()?;
        let net = self.network()?;
        let schedule = match &self.flow {
            FlowSource::SynLight => gen_syn_light(&net)?,
            FlowSource::SynHeavy => gen_syn_heavy(&net)?,
            FlowSource::File { path } => load_flow_file(self.resolve(path), &net, &self.kinematics)?,
            FlowSource::None => Vec::new(),
        };
        Ok(Scenario {
            net: Arc::new(net),
            schedule,
            kin: self.kinematics,
            yellow: self.yellow,
            horizon: self.episode_length,
            count_mode: self.controller.count_mode,
        })
    }

    pub fn hyper(&self) -> DqnHyper {
        DqnHyper {
            gamma: self.gamma,
            lr: self.lr,
            batch_size: self.batch_size,
            buffer_capacity: self.buffer_capacity,
            sync_every: self.sync_every,
        }
    }

    pub fn epsilon_schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            horizon: self.train_episodes,
        }
    }

    /// Fresh controller for one seed; DQN parameters come from the seed's
    /// initialization stream unless `params` is given.
    pub fn controller(
        &self,
        scenario: &Scenario,
        seed: u64,
        params: Option<QNetwork>,
    ) -> Result<Controller, ExperimentError> {
        let c = &self.controller;
        Ok(match c.kind {
            ControllerKind::Fixed => Controller::fixed_time(scenario.net.intersections.len(), c.fixed_green),
            ControllerKind::MaxPressure => Controller::MaxPressure { green: c.fixed_green },
            ControllerKind::GreedyPrcol => Controller::GreedyPrcol {
                duration: c.duration_policy(),
            },
            ControllerKind::Dqn => {
                let net = match params {
                    Some(net) => {
                        if net.layer_sizes() != self.layers.as_slice() {
                            return Err(ExperimentError::Config(format!(
                                "checkpoint layers {:?} do not match configured {:?}",
                                net.layer_sizes(),
                                self.layers
                            )));
                        }
                        net
                    }
                    None => QNetwork::random(&self.layers, &mut rng_for(seed, Stream::Init))?,
                };
                Controller::Dqn(Box::new(DqnController::new(
                    DqnLearner::new(net, self.hyper()),
                    &scenario.net,
                    c.duration_policy(),
                    c.reward,
                    c.reward_scale,
                )))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_object() {
        let cfg: ExperimentConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.episode_length, 3600);
        assert_eq!(cfg.seeds.len(), 3);
    }

    #[test]
    fn full_document() {
        let text = r#"{
            "name": "pdlight-heavy",
            "roadnet": {"type": "grid", "rows": 3, "cols": 3},
            "flow": {"type": "syn-heavy"},
            "controller": {"kind": "dqn", "reward": "pressure", "duration": "dynamic"},
            "train_episodes": 5,
            "seeds": [7]
        }"#;
        let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(cfg.controller.kind, ControllerKind::Dqn);
        assert_eq!(cfg.controller.reward, RewardKind::Pressure);
        assert_eq!(cfg.controller.duration, DurationMode::Dynamic);
        assert_eq!(cfg.flow, FlowSource::SynHeavy);
        let sc = cfg.scenario().unwrap();
        assert_eq!(sc.schedule.len(), 8640);
    }

    #[test]
    fn rejects_bad_values_and_unknown_fields() {
        let bad = [
            r#"{"gamma": 1.5}"#,
            r#"{"controller": {"min_green": 30, "max_green": 20}}"#,
            r#"{"seeds": []}"#,
            r#"{"layers": [12, 32, 4]}"#,
            r#"{"epsilon_start": 0.1, "epsilon_end": 0.5}"#,
        ];
        for text in bad {
            let cfg: ExperimentConfig = serde_json::from_str(text).unwrap();
            assert!(cfg.validate().is_err(), "{text}");
        }
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"gama": 0.5}"#).is_err());
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.lr = 0.01;
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    #[test]
    fn streams_differ() {
        use rand::Rng;
        let a: u64 = rng_for(1, Stream::Init).gen();
        let b: u64 = rng_for(1, Stream::Explore).gen();
        let c: u64 = rng_for(1, Stream::Init).gen();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }
}
