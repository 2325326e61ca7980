//! One intersection whose W/E straight exits are full. Pressure cannot tell a
//! full exit from a busy one and picks that phase; PRCOL does not.

use std::sync::Arc;

use pdlight::control::{decide_greedy_prcol, decide_maxpressure, DurationPolicy};
use pdlight::engine::{CountMode, World, DEFAULT_YELLOW};
use pdlight::netmodel::{build_grid, IntersectionId};
use pdlight::signalmath::{pressure, prcol, KinematicParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = KinematicParams::default();
    let net = Arc::new(build_grid(1, 1, 300.0, 300.0, k.vehicle_length, k.min_gap, k.max_speed)?);
    let inter = &net.intersections[0];
    let phases = &inter.phases;
    let mut world = World::new(net.clone(), Vec::new(), k, DEFAULT_YELLOW)?;

    // phase 0 (W/E straight): full queues, outgoing lanes packed
    for &m in &phases[0].movements {
        let lane = inter.incoming_lanes[m];
        world.place_vehicles(lane, vec![inter.movements[m].id], net.lane(lane).capacity)?;
        let out = inter.outgoing_lanes[m];
        world.place_vehicles(out, Vec::new(), net.lane(out).capacity)?;
    }
    // phase 1 (N/S straight): short queues, exits a quarter full
    for &m in &phases[1].movements {
        world.place_vehicles(inter.incoming_lanes[m], vec![inter.movements[m].id], 3)?;
        world.place_vehicles(inter.outgoing_lanes[m], Vec::new(), 10)?;
    }

    let counts = world.movement_counts(IntersectionId(0), CountMode::Total)?;
    for p in phases.iter().take(2) {
        for &m in &p.movements {
            let c = counts[m];
            println!(
                "phase {} movement {m:>2}: n_in {:>2} n_out {:>2}/{} pressure {:>5.1} prcol {:>5.2}",
                p.id,
                c.n_in,
                c.n_out,
                c.n_max,
                pressure(c),
                prcol(c)?
            );
        }
    }
    let mp = decide_maxpressure(&counts, phases, 10)?;
    let gp = decide_greedy_prcol(&counts, phases, &DurationPolicy::dynamic(10, 20), &k)?;
    println!("\nMaxPressure picks phase {}, greedy PRCOL picks phase {} for {} s", mp.phase, gp.phase, gp.green);

    // green on the blocked phase: a vehicle crosses only once the far end of
    // an exit lane has released one
    world.apply_decision(IntersectionId(0), 0, 10)?;
    for _ in 0..10 {
        let step = world.step(1.0)?;
        let crossed: u32 = phases[0].movements.iter().map(|&m| step.discharged[inter.movements[m].id.0]).sum();
        let exits: Vec<u32> = phases[0]
            .movements
            .iter()
            .map(|&m| step.occupancy[inter.outgoing_lanes[m].0])
            .collect();
        println!("t={:>2}: crossed {crossed}, exit occupancy {exits:?}", step.time);
    }
    Ok(())
}
