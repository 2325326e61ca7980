//! The Q-network on a two-state toy problem: state 0 pays 1 for action 2,
//! state 1 pays 1 for action 0, everything else pays 0. Episodes are one step.

use pdlight::learner::{argmax, DqnHyper, DqnLearner, QNetwork, Transition};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state(k: usize) -> Vec<f64> {
    let mut s = vec![0.0; 16];
    s[k] = 1.0;
    s
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = QNetwork::random(&[16, 32, 32, 4], &mut rng)?;
    let hyper = DqnHyper {
        lr: 0.01,
        ..DqnHyper::default()
    };
    let mut learner = DqnLearner::new(net, hyper);
    let best = [2usize, 0];

    for step in 0..4000 {
        let k = rng.gen_range(0..2);
        let a = rng.gen_range(0..4);
        let r = if a == best[k] { 1.0 } else { 0.0 };
        learner.store(Transition {
            s: state(k),
            a,
            r,
            s_next: state(k),
            terminal: true,
        });
        if let Some(loss) = learner.train_if_ready(&mut rng)? {
            if step % 1000 == 0 {
                println!("step {step:>4}: loss {loss:.5}");
            }
        }
    }
    for k in 0..2 {
        let q = learner.online.forward(&state(k))?;
        println!("state {k}: Q = {:.3?} -> action {} (want {})", q, argmax(&q), best[k]);
    }
    println!("{} train steps, {} target syncs", learner.train_steps(), learner.syncs());
    Ok(())
}
