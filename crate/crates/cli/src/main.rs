use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use etc_deadline::harness::{
    cmd_compare, cmd_evaluate, cmd_simulate, cmd_train, EvalReport, HarnessError, InitialCondition, PolicySource,
    RunConfig, QTABLE_FILE,
};

/// Event-triggered orbit keeping with learned deadlines.
#[derive(Parser)]
#[command(name = "etc-deadline", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; every key is optional.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `train.rng_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `output_dir` from the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Greedy,
    Learned,
    Random,
}

#[derive(Subcommand)]
enum Command {
    /// Train the deadline policy.
    Train {
        #[command(flatten)]
        common: Common,
        /// Ignore any checkpoint in the output directory.
        #[arg(long)]
        fresh: bool,
        /// Suppress per-generation progress on stderr.
        #[arg(long)]
        quiet: bool,
    },
    /// Evaluate one policy over the configured initial conditions.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "learned")]
        policy: PolicyKind,
        /// Q table for the learned policy; defaults to `<out>/qtable.bin`.
        #[arg(long)]
        qtable: Option<PathBuf>,
        /// Start every trajectory at this multiple of R.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Compare greedy and learned policies on identical initial states.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        qtable: Option<PathBuf>,
    },
    /// Simulate a single trajectory and export it for plotting.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "learned")]
        policy: PolicyKind,
        #[arg(long)]
        qtable: Option<PathBuf>,
        /// Initial radius as a multiple of R.
        #[arg(long, default_value_t = 2.3, conflicts_with = "state")]
        radius: f64,
        /// Explicit initial state `x,y,z,vx,vy,vz` in km and km/s.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        state: Option<Vec<f64>>,
        #[arg(long, default_value_t = 10)]
        events: usize,
    },
}

fn load_config(common: &Common) -> Result<(RunConfig, PathBuf), HarnessError> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.train.rng_seed = seed;
    }
    let out = common.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    cfg.output_dir = out.clone();
    cfg.validate()?;
    Ok((cfg, out))
}

fn policy_source(kind: PolicyKind, qtable: Option<PathBuf>, out: &Path) -> PolicySource {
    match kind {
        PolicyKind::Greedy => PolicySource::Greedy,
        PolicyKind::Random => PolicySource::Random,
        PolicyKind::Learned => PolicySource::Learned(qtable.unwrap_or_else(|| out.join(QTABLE_FILE))),
    }
}

fn print_report(r: &EvalReport) {
    println!(
        "{}: trajectories={} mean_diet_h={:.3} normalized_diet_h={:.3} min_diet_h={:.3} max_diet_h={:.3} \
         mean_aiet_h={:.3} mean_miet_h={:.3} min_barrier_km2={:.3e}",
        r.label.as_str(),
        r.trajectories.len(),
        r.mean_diet,
        (1.0 - r.gamma) * r.mean_diet,
        r.min_diet,
        r.max_diet,
        r.mean_aiet,
        r.mean_miet,
        r.min_barrier
    );
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Train { common, fresh, quiet } => {
            let (cfg, out) = load_config(&common)?;
            let total = cfg.train.generations;
            let outcome = cmd_train(&cfg, &out, fresh, |s| {
                if !quiet {
                    eprintln!(
                        "generation {}/{total}: mean_diet_h={:.3} epsilon={:.4} mean_alpha={:.4}",
                        s.generation + 1,
                        s.mean_diet,
                        s.epsilon,
                        s.mean_alpha
                    );
                }
            })?;
            if outcome.resumed_from > 0 {
                eprintln!("resumed from generation {}", outcome.resumed_from);
            }
            println!("wrote {}", out.display());
        }
        Command::Evaluate { common, policy, qtable, radius } => {
            let (mut cfg, out) = load_config(&common)?;
            if radius.is_some() {
                cfg.eval.fixed_initial_radius = radius;
                cfg.validate()?;
            }
            let report = cmd_evaluate(&cfg, &out, &policy_source(policy, qtable, &out))?;
            print_report(&report);
        }
        Command::Compare { common, qtable } => {
            let (cfg, out) = load_config(&common)?;
            let qtable = qtable.unwrap_or_else(|| out.join(QTABLE_FILE));
            let cmp = cmd_compare(&cfg, &out, &qtable)?;
            println!("overall");
            print_report(&cmp.overall.0);
            print_report(&cmp.overall.1);
            println!("diet_ratio={:.4}", cmp.overall_ratio());
            println!("fixed {}R", cfg.eval.compare_radius);
            print_report(&cmp.near_boundary.0);
            print_report(&cmp.near_boundary.1);
            println!("diet_ratio={:.4}", cmp.near_boundary_ratio());
        }
        Command::Simulate { common, policy, qtable, radius, state, events } => {
            let (cfg, out) = load_config(&common)?;
            let x0 = match state {
                Some(v) => InitialCondition::State(v.try_into().map_err(|v: Vec<f64>| {
                    HarnessError::Config(format!("--state needs 6 comma-separated values, got {}", v.len()))
                })?),
                None => InitialCondition::Radius(radius),
            };
            let path = cmd_simulate(&cfg, &out, &policy_source(policy, qtable, &out), &x0, events)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.category());
            ExitCode::FAILURE
        }
    }
}
