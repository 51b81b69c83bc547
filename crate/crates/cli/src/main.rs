use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use geodtn::analysis::{analytic_table, estimate_emt_to, AnalyticParams, MeetingTarget};
use geodtn::engine::Simulation;
use geodtn::metrics::{write_csv, MetricsRow};
use geodtn::scenario::{load_config_or_preset, DestinationConfig, MobilityConfig, ScenarioConfig};
use geodtn::sweep::{run_sweep, SweepSpec};
use geodtn::{Position, Scheme};

#[derive(Parser)]
#[command(name = "geodtn", version, about = "Geographic multi-copy DTN routing simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one scenario (config file or preset name).
    Run {
        config: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        scheme: Option<Scheme>,
        /// Directory for metrics.csv and events.log.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a parameter sweep described by a TOML spec.
    Sweep {
        spec: PathBuf,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        /// Worker threads; 0 uses every CPU.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print the closed-form delay and delivery table, e.g. `K=101 L=8 EMT=1000 lambda=1`.
    Analytic {
        #[arg(required = true, num_args = 1..)]
        params: Vec<String>,
    },
    /// Monte-Carlo expected meeting time for a random-waypoint scenario.
    EstimateEmt {
        config: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Target::Peer)]
        target: Target,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    /// Another mobile node.
    Peer,
    /// The scenario's first destination.
    Destination,
}

fn load(arg: &str, seed: Option<u64>) -> Result<ScenarioConfig> {
    let mut cfg = load_config_or_preset(arg).with_context(|| format!("loading `{arg}`"))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn first_destination(cfg: &ScenarioConfig) -> Result<Position> {
    match (&cfg.mobility, &cfg.destinations) {
        (MobilityConfig::Rwp { width_m, height_m, .. }, DestinationConfig::Center) => Ok(Position::new(width_m / 2.0, height_m / 2.0)),
        (_, DestinationConfig::Fixed { positions }) => Ok(Position::new(positions[0][0], positions[0][1])),
        _ => bail!("meeting-time estimation needs a random-waypoint scenario with a center or fixed destination"),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, scheme, out } => {
            let mut cfg = load(&config, seed)?;
            if let Some(s) = scheme {
                cfg.scheme = s;
            }
            let mut sim = Simulation::new(cfg.clone())?;
            sim.run_to_end()?;
            let output = sim.finish();
            let rows = [MetricsRow {
                scheme: cfg.scheme.name().to_string(),
                seed: cfg.seed,
                metrics: output.metrics,
            }];
            write_csv(std::io::stdout().lock(), &rows)?;
            if let Some(dir) = out {
                fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
                let mut buf = Vec::new();
                write_csv(&mut buf, &rows)?;
                fs::write(dir.join("metrics.csv"), buf)?;
                fs::write(dir.join("events.log"), output.log.to_text())?;
            }
        }
        Command::Sweep { spec, out, jobs } => {
            let (spec, base) = SweepSpec::load(&spec).with_context(|| format!("loading {}", spec.display()))?;
            let result = run_sweep(&spec, &base, &out, jobs)?;
            let runs: usize = result.points.iter().map(|p| p.rows.len()).sum();
            println!("{runs} runs written to {}", out.display());
        }
        Command::Analytic { params } => {
            let p = AnalyticParams::parse(&params.join(" "))?;
            print!("{}", analytic_table(&p));
        }
        Command::EstimateEmt {
            config,
            samples,
            seed,
            target,
        } => {
            let cfg = load(&config, seed)?;
            let target = match target {
                Target::Peer => MeetingTarget::Peer,
                Target::Destination => MeetingTarget::Fixed(first_destination(&cfg)?),
            };
            let e = estimate_emt_to(&cfg, samples, target)?;
            println!("emt_s={:.3} std_error_s={:.3} samples={} censored={}", e.mean, e.std_error, e.samples, e.censored);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
