//! PRCOL next to classic pressure, plus the platoon arithmetic behind
//! dynamic green times.

use pdlight::signalmath::{
    green_duration, n_pass, platoon_clear_time, platoon_discharged_by, pressure, prcol, KinematicParams,
    MovementCounts,
};

fn main() {
    let k = KinematicParams::default();

    println!("{:>5} {:>5} {:>5} | {:>8} {:>8} {:>6}", "n_in", "n_out", "n_max", "pressure", "prcol", "n_pass");
    for (n_in, n_out, n_max) in [(10, 20, 40), (7, 40, 40), (12, 0, 40), (30, 35, 40), (5, 0, 13)] {
        let c = MovementCounts::new(n_in, n_out, n_max);
        println!(
            "{n_in:>5} {n_out:>5} {n_max:>5} | {:>8.1} {:>8.2} {:>6}",
            pressure(c),
            prcol(c).unwrap(),
            n_pass(c)
        );
    }

    println!("\nplatoon clearance (a = {} m/s^2, v = {:.2} m/s)", k.accel, k.max_speed);
    for n in [1, 5, 10, 20, 40] {
        println!("  {n:>3} vehicles: {:>7.3} s", platoon_clear_time(n, &k));
    }
    for t in [5.0, 10.0, 20.0] {
        println!("  within {t:>4} s: {} vehicles", platoon_discharged_by(t, &k));
    }

    println!("\ngreen for the phase, clamped to [10, 20] s");
    for pair in [[(3, 0), (2, 0)], [(12, 10), (8, 0)], [(40, 0), (25, 5)], [(30, 38), (0, 0)]] {
        let counts: Vec<MovementCounts> = pair.iter().map(|&(i, o)| MovementCounts::new(i, o, 40)).collect();
        println!("  {pair:?} -> {} s", green_duration(&counts, &k, 10, 20));
    }
}
