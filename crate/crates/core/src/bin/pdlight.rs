use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pdlight::engine::read_telemetry;
use pdlight::experiment::{
    case_study, compare, evaluate, greedy_episode, render_table, run_seed, train, write_case_study, write_json,
    write_seed_run, write_telemetry_file, write_trained_seed, ExperimentConfig, MetricsReport, Timing,
};
use pdlight::flows::{gen_syn_heavy, gen_syn_light, write_flow_file};
use pdlight::learner::checkpoint;
use pdlight::netmodel::build_grid;
use pdlight::signalmath::KinematicParams;

#[derive(Parser)]
#[command(name = "pdlight", version, about = "Traffic signal control experiments on grid networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Synthetic {
    SynLight,
    SynHeavy,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic flow file for the 3x3 grid.
    GenerateFlow {
        set: Synthetic,
        #[arg(long)]
        out: PathBuf,
        /// Also write the matching roadnet file.
        #[arg(long)]
        roadnet_out: Option<PathBuf>,
    },
    /// One seed: a single episode, or training plus a greedy episode for dqn.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a dqn controller on every configured seed.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy episode of a saved checkpoint.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run several configs and tabulate them.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Phase-choice and passed-vehicle tables from a telemetry file.
    CaseStudy {
        #[arg(long)]
        telemetry: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PDLIGHT_LOG", "warn")).init();
    let cli = Cli::parse();
    let started = Instant::now();
    let (name, out) = match cli.command {
        Command::GenerateFlow { set, out, roadnet_out } => {
            generate_flow(set, &out, roadnet_out.as_deref())?;
            return Ok(());
        }
        Command::Run { config, seed, out } => {
            let cfg = load(&config)?;
            let scenario = cfg.scenario()?;
            let run = run_seed(&cfg, &scenario, seed, true)?;
            write_seed_run(&out, &run)?;
            let report = MetricsReport::new(&cfg.name, &pdlight::experiment::label(&cfg), &cfg.fingerprint(), vec![run.metrics]);
            write_json(&out.join("metrics.json"), &report)?;
            print_summary(&report);
            ("run", out)
        }
        Command::Train { config, out } => {
            let cfg = load(&config)?;
            let scenario = cfg.scenario()?;
            let trained = train(&cfg)?;
            for seed in &trained.seeds {
                let dir = out.join(format!("seed_{}", seed.seed));
                write_trained_seed(&dir, seed)?;
                let eval = greedy_episode(&cfg, &scenario, seed.last.clone(), true)?;
                write_telemetry_file(&dir.join("telemetry.csv"), eval.telemetry.as_deref().unwrap_or_default())?;
            }
            write_json(&out.join("metrics.json"), &trained.report)?;
            print_summary(&trained.report);
            ("train", out)
        }
        Command::Eval { config, checkpoint: ckpt, out } => {
            let cfg = load(&config)?;
            let net = checkpoint::load(&ckpt).with_context(|| format!("loading {}", ckpt.display()))?;
            let (report, telemetry) = evaluate(&cfg, net)?;
            write_json(&out.join("metrics.json"), &report)?;
            write_telemetry_file(&out.join("telemetry.csv"), &telemetry)?;
            print_summary(&report);
            ("eval", out)
        }
        Command::Compare { configs, out } => {
            let cfgs = configs.iter().map(|p| load(p)).collect::<Result<Vec<_>>>()?;
            let reports = compare(&cfgs)?;
            let table = render_table(&reports);
            write_json(&out.join("metrics.json"), &reports)?;
            std::fs::write(out.join("comparison.txt"), &table).with_context(|| format!("writing {}", out.display()))?;
            print!("{table}");
            ("compare", out)
        }
        Command::CaseStudy { telemetry, out } => {
            let rows = read_telemetry(&telemetry).with_context(|| format!("reading {}", telemetry.display()))?;
            let study = case_study(&rows);
            write_case_study(&out, &study)?;
            println!("{}", serde_json::to_string_pretty(&study.summary)?);
            return Ok(());
        }
    };
    let timing = Timing {
        command: name.to_string(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(&out.join("timing.json"), &timing)?;
    Ok(())
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::load(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn generate_flow(set: Synthetic, out: &Path, roadnet_out: Option<&Path>) -> Result<()> {
    let k = KinematicParams::default();
    let net = build_grid(3, 3, 300.0, 300.0, k.vehicle_length, k.min_gap, k.max_speed)?;
    let events = match set {
        Synthetic::SynLight => gen_syn_light(&net)?,
        Synthetic::SynHeavy => gen_syn_heavy(&net)?,
    };
    if events.is_empty() {
        bail!("no events generated");
    }
    write_flow_file(out, &events, &net)?;
    if let Some(p) = roadnet_out {
        net.write_roadnet(p)?;
    }
    println!("{} events written to {}", events.len(), out.display());
    Ok(())
}

fn print_summary(r: &MetricsReport) {
    println!(
        "{} ({}): average travel time {:.2} s, throughput {}",
        r.name, r.controller, r.average_travel_time, r.throughput
    );
}
