//! Arrival gaps of the Syn-Heavy north entry, and a flow-file round trip.

use pdlight::flows::{arrival_interval_stats, gen_syn_heavy, load_flow_file, write_flow_file};
use pdlight::netmodel::{build_grid, Compass};
use pdlight::signalmath::KinematicParams;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let k = KinematicParams::default();
    let net = build_grid(3, 3, 300.0, 300.0, k.vehicle_length, k.min_gap, k.max_speed)?;
    let events = gen_syn_heavy(&net)?;

    let (road, _) = net
        .entry_roads()
        .into_iter()
        .find(|(_, side)| *side == Compass::North)
        .expect("north entry");
    let lane = net.road(road).lanes[1];
    let stats = arrival_interval_stats(&events, lane);
    println!("{} arrivals on {}", stats.series.len() + 1, net.road(road).name);
    for period in 0..4 {
        let (lo, hi) = (period as f64 * 900.0, (period + 1) as f64 * 900.0);
        let gaps: Vec<f64> = stats.series.iter().filter(|(t, _)| *t >= lo && *t < hi).map(|s| s.1).collect();
        let mean = gaps.iter().sum::<f64>() / gaps.len().max(1) as f64;
        println!("  {lo:>6}-{hi:<6} mean gap {mean:>5.2} s over {} arrivals", gaps.len());
    }

    let path = std::env::temp_dir().join("syn_heavy_flow.json");
    write_flow_file(&path, &events, &net)?;
    let back = load_flow_file(&path, &net, &k)?;
    println!("\n{} events -> {} -> {} events, identical: {}", events.len(), path.display(), back.len(), back == events);
    Ok(())
}
