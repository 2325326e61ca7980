//! Rule-based controllers on both synthetic demands.

use pdlight::control::{ControllerKind, DurationMode};
use pdlight::experiment::{compare, render_table, ExperimentConfig, FlowSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfgs = Vec::new();
    for (flow, tag) in [(FlowSource::SynLight, "light"), (FlowSource::SynHeavy, "heavy")] {
        for (kind, duration) in [
            (ControllerKind::Fixed, DurationMode::Fixed),
            (ControllerKind::MaxPressure, DurationMode::Fixed),
            (ControllerKind::GreedyPrcol, DurationMode::Fixed),
            (ControllerKind::GreedyPrcol, DurationMode::Dynamic),
        ] {
            let mut cfg = ExperimentConfig {
                name: format!("{kind}-{tag}"),
                flow: flow.clone(),
                seeds: vec![0],
                ..ExperimentConfig::default()
            };
            cfg.controller.kind = kind;
            cfg.controller.duration = duration;
            cfgs.push(cfg);
        }
    }
    print!("{}", render_table(&compare(&cfgs)?));
    Ok(())
}
