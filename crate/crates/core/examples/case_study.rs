//! Case-study tables from a MaxPressure episode on Syn-Heavy.
//!
//! Writes the CSVs into a temp directory and prints the summary.

use pdlight::control::ControllerKind;
use pdlight::experiment::{case_study, run_seed, write_case_study, ExperimentConfig, FlowSource};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = ExperimentConfig {
        name: "maxpressure-heavy".into(),
        flow: FlowSource::SynHeavy,
        ..ExperimentConfig::default()
    };
    cfg.controller.kind = ControllerKind::MaxPressure;
    let scenario = cfg.scenario()?;
    let run = run_seed(&cfg, &scenario, 0, true)?;
    let study = case_study(run.telemetry.as_deref().unwrap_or_default());

    println!("phase  chosen  share  mean vehicles");
    for p in &study.phases {
        println!("{:>5}  {:>6}  {:>5.3}  {:>13.2}", p.phase, p.chosen, p.share, p.mean_vehicles);
    }
    let s = &study.summary;
    println!(
        "\nmax-vehicle phase chosen in {:.3} of {} decisions",
        s.max_vehicle_phase_frequency.unwrap_or(0.0),
        s.decisions
    );
    println!(
        "green intervals passing more than n_pass at the decision: {} of {}",
        s.interval_violations,
        study.intervals.len()
    );
    // the out lane can drain while the green runs, making room the decision
    // instant did not see
    if let Some(iv) = study.intervals.iter().find(|iv| iv.actual_total() > iv.ideal_total()) {
        println!("  e.g. t={} node {}: n_in {:?}, ideal {:?}, actual {:?}", iv.time, iv.intersection, iv.n_in, iv.ideal, iv.actual);
    }

    let dir = std::env::temp_dir().join("pdlight_case_study");
    write_case_study(&dir, &study)?;
    println!("\ntables in {}", dir.display());
    Ok(())
}
