//! Drives the engine by hand with a FixedTime cycle on Syn-Light.

use std::sync::Arc;

use pdlight::control::decide_fixed;
use pdlight::engine::{World, DEFAULT_YELLOW};
use pdlight::experiment::EpisodeMetrics;
use pdlight::flows::gen_syn_light;
use pdlight::netmodel::{build_grid, IntersectionId};
use pdlight::signalmath::KinematicParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = KinematicParams::default();
    let net = Arc::new(build_grid(3, 3, 300.0, 300.0, k.vehicle_length, k.min_gap, k.max_speed)?);
    let schedule = gen_syn_light(&net)?;
    let mut world = World::new(net.clone(), schedule, k, DEFAULT_YELLOW)?;
    let mut cycle = vec![0usize; net.intersections.len()];

    for t in 0..3600 {
        for (i, next) in cycle.iter_mut().enumerate() {
            let id = IntersectionId(i);
            if world.needs_decision(id) {
                let d = decide_fixed(*next, 10);
                world.apply_decision(id, d.phase, d.green)?;
                *next += 1;
            }
        }
        world.step(1.0)?;
        if t % 600 == 599 {
            println!(
                "t={:>4}: entered {:>4}, on network {:>3}, waiting to enter {:>2}, exited {:>4}",
                t + 1,
                world.entered_total(),
                world.on_network(),
                world.buffered(),
                world.exited_total()
            );
        }
    }
    let m = EpisodeMetrics::from_vehicles(world.vehicles(), 3600.0);
    println!(
        "\naverage travel time {:.2} s, throughput {} of {}",
        m.average_travel_time, m.throughput, m.generated
    );
    Ok(())
}
