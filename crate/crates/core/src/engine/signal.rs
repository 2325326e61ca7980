use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::netmodel::PHASE_COUNT;

pub const DEFAULT_YELLOW: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalMode {
    Green,
    Yellow,
}

impl std::fmt::Display for SignalMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SignalMode::Green => "green",
            SignalMode::Yellow => "yellow",
        })
    }
}

/// Signal timer of one intersection. A fresh signal shows phase 0 with no
/// green left, so it asks for a decision straight away.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignalState {
    /// Phase whose movements are green (in green mode) or clearing (in yellow).
    pub phase: usize,
    pub mode: SignalMode,
    /// Whole seconds left in the current mode.
    pub remaining: u32,
    /// Phase that follows the yellow.
    pub next_phase: usize,
    /// Green length granted to `next_phase`.
    pub pending_green: u32,
    pub yellow: u32,
}

impl SignalState {
    pub fn new(yellow: u32) -> Self {
        SignalState {
            phase: 0,
            mode: SignalMode::Green,
            remaining: 0,
            next_phase: 0,
            pending_green: 0,
            yellow,
        }
    }

    pub fn needs_decision(&self) -> bool {
        self.mode == SignalMode::Green && self.remaining == 0
    }

    /// Keeps the current phase for another `green` seconds, or starts the
    /// yellow that leads into `phase`.
    pub fn apply(&mut self, phase: usize, green: u32) -> Result<(), EngineError> {
        if phase >= PHASE_COUNT {
            return Err(EngineError::PhaseOutOfRange(phase));
        }
        if green == 0 {
            return Err(EngineError::ZeroGreen);
        }
        if !self.needs_decision() {
            return Err(EngineError::DecisionNotDue);
        }
        if phase == self.phase {
            self.remaining += green;
        } else if self.yellow == 0 {
            self.phase = phase;
            self.remaining = green;
        } else {
            self.mode = SignalMode::Yellow;
            self.remaining = self.yellow;
            self.next_phase = phase;
            self.pending_green = green;
        }
        Ok(())
    }

    pub fn is_green(&self, phase: usize) -> bool {
        self.mode == SignalMode::Green && self.phase == phase && self.remaining > 0
    }

    /// Advances the timer by one second.
    pub fn tick(&mut self) {
        if self.remaining == 0 {
            return;
        }
        self.remaining -= 1;
        if self.remaining == 0 && self.mode == SignalMode::Yellow {
            self.mode = SignalMode::Green;
            self.phase = self.next_phase;
            self.remaining = self.pending_green;
            self.pending_green = 0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn due(phase: usize) -> SignalState {
        SignalState {
            phase,
            ..SignalState::new(DEFAULT_YELLOW)
        }
    }

    #[test]
    fn same_phase_extends_without_yellow() {
        let mut s = due(0);
        s.apply(0, 10).unwrap();
        assert_eq!((s.mode, s.phase, s.remaining), (SignalMode::Green, 0, 10));

        let mut s = due(3);
        s.apply(3, 15).unwrap();
        assert_eq!((s.mode, s.phase, s.remaining), (SignalMode::Green, 3, 15));
    }

    #[test]
    fn switch_goes_through_yellow() {
        let mut s = due(0);
        s.apply(1, 10).unwrap();
        assert_eq!((s.mode, s.remaining, s.next_phase), (SignalMode::Yellow, 5, 1));
        let mut greens = Vec::new();
        for _ in 0..15 {
            greens.push(s.is_green(1));
            s.tick();
        }
        assert_eq!(greens.iter().filter(|g| **g).count(), 10);
        assert!(greens[..5].iter().all(|g| !g));
        assert!(s.needs_decision());
        assert_eq!(s.phase, 1);
    }

    #[test]
    fn rejects_bad_decisions() {
        let mut s = due(0);
        assert!(matches!(s.apply(4, 10), Err(EngineError::PhaseOutOfRange(4))));
        assert!(matches!(s.apply(1, 0), Err(EngineError::ZeroGreen)));
        s.apply(1, 10).unwrap();
        assert!(matches!(s.apply(2, 10), Err(EngineError::DecisionNotDue)));
    }

    #[test]
    fn zero_yellow_switches_at_once() {
        let mut s = SignalState::new(0);
        s.apply(2, 12).unwrap();
        assert!(s.is_green(2));
        assert_eq!(s.remaining, 12);
    }
}
