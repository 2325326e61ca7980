//! Grid traffic simulation and adaptive signal control.
//!
//! The crate bundles a deterministic mesoscopic simulator for grids of
//! four-leg intersections, a capacity-aware pressure measure (PRCOL) and the
//! closed-form signal arithmetic around it, a from-scratch DQN learner, the
//! FixedTime / MaxPressure baselines and an experiment harness that trains,
//! evaluates and compares controllers.
//!
//! Runnable walkthroughs live in `examples/`; `cargo run --example <name>`.

pub mod control;
pub mod experiment;
pub mod engine;
pub mod flows;
pub mod learner;
pub mod netmodel;
pub mod signalmath;
