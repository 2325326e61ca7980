//! Dynamic green durations chosen by greedy PRCOL on Syn-Heavy.

use std::collections::BTreeMap;

use pdlight::control::{ControllerKind, DurationMode};
use pdlight::experiment::{run_seed, ExperimentConfig, FlowSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig {
        name: "greedy-dynamic".into(),
        flow: FlowSource::SynHeavy,
        ..ExperimentConfig::default()
    };
    cfg.controller.kind = ControllerKind::GreedyPrcol;
    cfg.controller.duration = DurationMode::Dynamic;
    let scenario = cfg.scenario()?;
    let run = run_seed(&cfg, &scenario, 0, true)?;

    let mut histogram: BTreeMap<u32, u32> = BTreeMap::new();
    for row in run.telemetry.as_deref().unwrap_or_default() {
        if let Some((_, green)) = row.decision {
            *histogram.entry(green).or_default() += 1;
        }
    }
    println!("green (s)  decisions");
    for (green, n) in &histogram {
        println!("{green:>9}  {n:>5} {}", "#".repeat((*n as usize).div_ceil(20)));
    }
    println!("\naverage travel time {:.2} s", run.metrics.metrics.average_travel_time);
    Ok(())
}
