//! Trains the PRCOL-reward DQN on Syn-Light for one seed and evaluates the
//! final parameters greedily.
//!
//! `cargo run --release --example train_pdlight -- [episodes] [checkpoint]`

use pdlight::control::ControllerKind;
use pdlight::experiment::{greedy_episode, train_seed, ExperimentConfig};
use pdlight::learner::checkpoint;
use pdlight::signalmath::RewardKind;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let episodes: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(20);
    let out = args
        .next()
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("pdlight_checkpoint.txt"));

    let mut cfg = ExperimentConfig {
        name: "pdlight-light".into(),
        train_episodes: episodes,
        ..ExperimentConfig::default()
    };
    cfg.controller.kind = ControllerKind::Dqn;
    cfg.controller.reward = RewardKind::Prcol;
    let scenario = cfg.scenario()?;

    let trained = train_seed(&cfg, &scenario, 0)?;
    println!("{:>3} {:>6} {:>10} {:>10} {:>10}", "ep", "eps", "train ATT", "eval ATT", "loss");
    for row in &trained.curve {
        println!(
            "{:>3} {:>6.3} {:>10.2} {:>10.2} {:>10.5}",
            row.episode,
            row.epsilon,
            row.train_average_travel_time,
            row.eval_average_travel_time,
            row.mean_loss.unwrap_or(f64::NAN)
        );
    }
    checkpoint::save(&trained.last, &out)?;
    let again = greedy_episode(&cfg, &scenario, checkpoint::load(&out)?, false)?;
    println!(
        "\nbest episode {}; saved final parameters to {}; reloaded greedy ATT {:.2} s",
        trained.best_episode,
        out.display(),
        again.metrics.average_travel_time
    );
    Ok(())
}
