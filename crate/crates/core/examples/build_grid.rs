//! Builds the 3x3 grid, validates it and writes it in roadnet JSON form.
//!
//! `cargo run --example build_grid -- [out.json]`

use pdlight::netmodel::{build_grid, load_roadnet, Compass, Turn};
use pdlight::signalmath::KinematicParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = KinematicParams::default();
    let net = build_grid(3, 3, 300.0, 300.0, k.vehicle_length, k.min_gap, k.max_speed)?;
    net.validate().map_err(|v| format!("{} violations", v.len()))?;

    println!(
        "{} nodes, {} roads, {} lanes, {} intersections",
        net.nodes.len(),
        net.roads.len(),
        net.lanes.len(),
        net.intersections.len()
    );
    println!("{} entry roads, {} exit lanes", net.entry_roads().len(), net.boundary_exits.len());
    println!("lane capacity on 300 m links: {}", net.lanes[0].capacity);

    let centre = &net.intersections[4];
    println!("\n{} movements:", centre.name);
    for side in [Compass::West, Compass::East, Compass::North, Compass::South] {
        for turn in [Turn::Left, Turn::Straight, Turn::Right] {
            let m = centre.movement(side, turn);
            println!(
                "  {:>2} {side:?} {turn:?}: {} -> {}",
                m.local_index(),
                net.road(m.in_road).name,
                net.road(m.out_road).name
            );
        }
    }
    for p in &centre.phases {
        println!("phase {} = movements {:?}", p.id, p.movements);
    }

    let out = std::env::args().nth(1).map(Into::into).unwrap_or_else(|| std::env::temp_dir().join("roadnet_3x3.json"));
    net.write_roadnet(&out)?;
    let back = load_roadnet(&out, k.vehicle_length, k.min_gap)?;
    println!("\nwrote {} ({} roads read back)", out.display(), back.roads.len());
    Ok(())
}
