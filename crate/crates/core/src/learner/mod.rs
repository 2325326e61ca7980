//! Deep Q-learning: an MLP Q-function with hand-written backpropagation,
//! replay memory, exploration schedule, TD targets and target-network sync.

pub mod checkpoint;
mod qnet;
mod replay;
mod schedule;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use qnet::{argmax, QNetwork};
pub use replay::ReplayBuffer;
pub use schedule::EpsilonSchedule;

pub const DEFAULT_LAYERS: [usize; 4] = [16, 32, 32, 4];

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("input has width {got}, network expects {expected}")]
    Width { expected: usize, got: usize },
    #[error("action {0} is outside the network's outputs")]
    Action(usize),
    #[error("architecture mismatch: {0}")]
    Architecture(String),
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("discount must lie in [0, 1], got {0}")]
    Gamma(f64),
    #[error("parameters became non-finite")]
    NonFinite,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: Vec<f64>,
    pub a: usize,
    pub r: f64,
    pub s_next: Vec<f64>,
    pub terminal: bool,
}

/// `r` for a terminal transition, otherwise `r + γ · max_a Q̂(s', a)`.
pub fn td_target(r: f64, s_next: &[f64], target: &QNetwork, gamma: f64, terminal: bool) -> Result<f64, LearnerError> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(LearnerError::Gamma(gamma));
    }
    if terminal || gamma == 0.0 {
        return Ok(r);
    }
    let q = target.forward(s_next)?;
    Ok(r + gamma * q.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// Mean squared TD error over the batch, counting only the taken action.
pub fn batch_loss(net: &QNetwork, target: &QNetwork, batch: &[&Transition], gamma: f64) -> Result<f64, LearnerError> {
    if batch.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    let mut sum = 0.0;
    for t in batch {
        let y = td_target(t.r, &t.s_next, target, gamma, t.terminal)?;
        let q = net.forward(&t.s)?;
        if t.a >= q.len() {
            return Err(LearnerError::Action(t.a));
        }
        sum += (y - q[t.a]).powi(2);
    }
    Ok(sum / batch.len() as f64)
}

/// Loss and its gradient with respect to the online parameters, laid out as
/// [`QNetwork::params`].
pub fn batch_gradient(
    net: &QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
) -> Result<(f64, Vec<f64>), LearnerError> {
    if batch.is_empty() {
        return Err(LearnerError::EmptyBatch);
    }
    let b = batch.len() as f64;
    let mut grad = vec![0.0; net.param_count()];
    let mut loss = 0.0;
    for t in batch {
        let y = td_target(t.r, &t.s_next, target, gamma, t.terminal)?;
        let mut err = 0.0;
        net.accumulate_action_gradient(
            &t.s,
            t.a,
            |q| {
                err = q - y;
                2.0 * err / b
            },
            &mut grad,
        )?;
        loss += err * err;
    }
    Ok((loss / b, grad))
}

/// One plain gradient-descent step on the batch loss. Returns the loss before
/// the update; `target` is only read.
pub fn train_step(
    net: &mut QNetwork,
    target: &QNetwork,
    batch: &[&Transition],
    gamma: f64,
    lr: f64,
) -> Result<f64, LearnerError> {
    let (loss, grad) = batch_gradient(net, target, batch, gamma)?;
    net.descend(&grad, lr);
    if !net.all_finite() {
        return Err(LearnerError::NonFinite);
    }
    Ok(loss)
}

/// Copies the online parameters into the target network.
pub fn sync_target(net: &QNetwork, target: &mut QNetwork) -> Result<(), LearnerError> {
    if net.layer_sizes() != target.layer_sizes() {
        return Err(LearnerError::Architecture(format!(
            "{:?} vs {:?}",
            net.layer_sizes(),
            target.layer_sizes()
        )));
    }
    target.clone_from(net);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DqnHyper {
    pub gamma: f64,
    pub lr: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Train steps between target syncs.
    pub sync_every: u64,
}

impl Default for DqnHyper {
    fn default() -> Self {
        DqnHyper {
            gamma: 0.8,
            lr: 0.001,
            batch_size: 32,
            buffer_capacity: 10_000,
            sync_every: 5,
        }
    }
}

/// Online and target networks with their replay memory.
#[derive(Debug, Clone)]
pub struct DqnLearner {
    pub online: QNetwork,
    pub target: QNetwork,
    pub replay: ReplayBuffer,
    pub hyper: DqnHyper,
    train_steps: u64,
    syncs: u64,
}

impl DqnLearner {
    pub fn new(online: QNetwork, hyper: DqnHyper) -> Self {
        DqnLearner {
            target: online.clone(),
            online,
            replay: ReplayBuffer::new(hyper.buffer_capacity),
            hyper,
            train_steps: 0,
            syncs: 0,
        }
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn store(&mut self, t: Transition) {
        self.replay.push(t);
    }

    /// Trains on a fresh sample when the memory holds more than a batch,
    /// syncing the target every `sync_every` train steps.
    pub fn train_if_ready<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Option<f64>, LearnerError> {
        let Some(batch) = self.replay.sample(self.hyper.batch_size, rng) else {
            return Ok(None);
        };
        let loss = train_step(&mut self.online, &self.target, &batch, self.hyper.gamma, self.hyper.lr)?;
        self.train_steps += 1;
        if self.hyper.sync_every > 0 && self.train_steps % self.hyper.sync_every == 0 {
            sync_target(&self.online, &mut self.target)?;
            self.syncs += 1;
        }
        Ok(Some(loss))
    }
}
