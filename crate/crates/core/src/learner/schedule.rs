use serde::{Deserialize, Serialize};

/// Exploration rate decaying linearly from `start` at episode 0 to `end` at
/// episode `horizon - 1`, then held at `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub horizon: usize,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        EpsilonSchedule {
            start: 0.8,
            end: 0.2,
            horizon: 100,
        }
    }
}

impl EpsilonSchedule {
    pub fn epsilon(&self, episode: usize) -> f64 {
        if self.horizon <= 1 {
            return if episode == 0 { self.start } else { self.end };
        }
        let last = (self.horizon - 1) as f64;
        let frac = (episode as f64 / last).min(1.0);
        self.start + (self.end - self.start) * frac
    }
}
