use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::io::{load_qtable, load_visits, save_qtable, save_visits, write_atomic, write_csv};
use super::{evaluate_policy, simulate, DeadlinePolicy, EvalReport, HarnessError, PolicyLabel, RunConfig};
use crate::engine::{EventCause, Trigger, SECONDS_PER_HOUR};
use crate::learning::{episode_rng, greedy_policy, Environment, GenerationStats, QTable, Trainer};
use crate::orbit::OrbitPlant;

pub const QTABLE_FILE: &str = "qtable.bin";
pub const VISITS_FILE: &str = "visits.bin";
pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const LEARNING_CURVE_FILE: &str = "learning_curve.csv";
pub const POLICY_FILE: &str = "policy.csv";
pub const COMPARE_FILE: &str = "compare.csv";
pub const COMPARE_TRAJECTORIES_FILE: &str = "compare_trajectories.csv";
pub const COMPARE_INITIAL_STATES_FILE: &str = "compare_initial_states.csv";
pub const SIMULATION_FILE: &str = "simulation.csv";

pub const LEARNING_CURVE_HEADER: [&str; 6] =
    ["generation", "mean_diet_h", "min_diet_h", "max_diet_h", "epsilon", "mean_alpha"];
pub const POLICY_HEADER: [&str; 6] =
    ["bucket", "radius_center_km", "radius_over_R", "deadline_s", "deadline_h", "q_max_h"];
pub const TRAJECTORY_HEADER: [&str; 11] = [
    "scenario",
    "trajectory",
    "initial_radius_over_R",
    "diet_h",
    "normalized_diet_h",
    "aiet_h",
    "miet_h",
    "min_barrier_km2",
    "max_intra_event_xi_km2",
    "triggered_events",
    "policy",
];
pub const INITIAL_STATE_HEADER: [&str; 8] =
    ["scenario", "trajectory", "x_km", "y_km", "z_km", "vx_km_s", "vy_km_s", "vz_km_s"];
pub const COMPARE_HEADER: [&str; 10] = [
    "scenario",
    "trajectories",
    "greedy_mean_diet_h",
    "learned_mean_diet_h",
    "diet_ratio",
    "greedy_mean_normalized_diet_h",
    "learned_mean_normalized_diet_h",
    "greedy_mean_aiet_h",
    "learned_mean_aiet_h",
    "min_barrier_km2",
];
pub const SIMULATION_HEADER: [&str; 6] =
    ["time_h", "radius_over_R", "barrier_km2", "trigger_km2", "event", "event_index"];

/// Where the deadline policy comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum PolicySource {
    /// Always `δ_max`.
    Greedy,
    /// Per-bucket argmax of a saved table.
    Learned(PathBuf),
    /// Uniform draw from the deadline grid at each event.
    Random,
}

/// Initial condition of a single simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    /// Multiple of R; plane and phase drawn from the seeded stream.
    Radius(f64),
    /// Explicit `[x, y, z, vx, vy, vz]`, km and km/s.
    State([f64; 6]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub fingerprint: String,
    pub completed_generations: usize,
    pub stats: Vec<GenerationStats>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub table: QTable,
    pub stats: Vec<GenerationStats>,
    pub resumed_from: usize,
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub overall: (EvalReport, EvalReport),
    pub near_boundary: (EvalReport, EvalReport),
}

impl Comparison {
    pub fn overall_ratio(&self) -> f64 {
        self.overall.1.mean_diet / self.overall.0.mean_diet
    }

    pub fn near_boundary_ratio(&self) -> f64 {
        self.near_boundary.1.mean_diet / self.near_boundary.0.mean_diet
    }
}

#[derive(Serialize)]
struct CurveRow {
    generation: usize,
    mean_diet_h: f64,
    min_diet_h: f64,
    max_diet_h: f64,
    epsilon: f64,
    mean_alpha: f64,
}

#[derive(Serialize)]
struct PolicyRow {
    bucket: usize,
    radius_center_km: f64,
    radius_over_r: f64,
    deadline_s: f64,
    deadline_h: f64,
    q_max_h: f64,
}

#[derive(Serialize)]
struct TrajectoryRow<'a> {
    scenario: &'a str,
    trajectory: usize,
    initial_radius_over_r: f64,
    diet_h: f64,
    normalized_diet_h: f64,
    aiet_h: f64,
    miet_h: f64,
    min_barrier_km2: f64,
    max_intra_event_xi_km2: f64,
    triggered_events: usize,
    policy: &'static str,
}

#[derive(Serialize)]
struct InitialStateRow<'a> {
    scenario: &'a str,
    trajectory: usize,
    x: f64,
    y: f64,
    z: f64,
    vx: f64,
    vy: f64,
    vz: f64,
}

#[derive(Serialize)]
struct CompareRow<'a> {
    scenario: &'a str,
    trajectories: usize,
    greedy_mean_diet_h: f64,
    learned_mean_diet_h: f64,
    diet_ratio: f64,
    greedy_mean_normalized_diet_h: f64,
    learned_mean_normalized_diet_h: f64,
    greedy_mean_aiet_h: f64,
    learned_mean_aiet_h: f64,
    min_barrier_km2: f64,
}

#[derive(Serialize)]
struct SimulationRow {
    time_h: f64,
    radius_over_r: f64,
    barrier_km2: f64,
    trigger_km2: f64,
    event: u8,
    event_index: usize,
}

fn ensure_dir(dir: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|source| HarnessError::Io { path: dir.to_path_buf(), source })
}

fn curve_rows(stats: &[GenerationStats]) -> impl Iterator<Item = CurveRow> + '_ {
    stats.iter().map(|s| CurveRow {
        generation: s.generation,
        mean_diet_h: s.mean_diet,
        min_diet_h: s.min_diet,
        max_diet_h: s.max_diet,
        epsilon: s.epsilon,
        mean_alpha: s.mean_alpha,
    })
}

fn write_policy(cfg: &RunConfig, table: &QTable, path: &Path) -> Result<(), HarnessError> {
    let grid = cfg.radius_grid()?;
    let deadlines = cfg.deadline_grid()?;
    let policy = greedy_policy(table, &deadlines);
    let r = cfg.body.mean_radius;
    let rows = policy.iter().enumerate().map(|(b, &d)| PolicyRow {
        bucket: b,
        radius_center_km: grid.center(b),
        radius_over_r: grid.center(b) / r,
        deadline_s: d,
        deadline_h: d / SECONDS_PER_HOUR,
        q_max_h: table.row_max(b),
    });
    write_csv(path, &POLICY_HEADER, rows)
}

fn read_checkpoint(path: &Path) -> Result<Checkpoint, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Format {
        path: path.to_path_buf(),
        offset: 0,
        message: format!("line {} column {}: {e}", e.line(), e.column()),
    })
}

/// Trains the orbital deadline policy and writes the Q table, learning curve,
/// policy table and a per-generation checkpoint into `out`.
///
/// An existing checkpoint for the same configuration is resumed unless `fresh`.
pub fn cmd_train(
    cfg: &RunConfig,
    out: &Path,
    fresh: bool,
    mut on_generation: impl FnMut(&GenerationStats),
) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    ensure_dir(out)?;
    let plant = cfg.build_plant()?;
    let grid = cfg.radius_grid()?;
    let deadlines = cfg.deadline_grid()?;
    let fingerprint = cfg.training_fingerprint();
    let checkpoint_path = out.join(CHECKPOINT_FILE);

    let (table, mut stats) = if !fresh && checkpoint_path.exists() {
        let cp = read_checkpoint(&checkpoint_path)?;
        if cp.fingerprint != fingerprint {
            return Err(HarnessError::Config(format!(
                "{} was written by a different configuration; rerun with --fresh to discard it",
                checkpoint_path.display()
            )));
        }
        if cp.completed_generations != cp.stats.len() || cp.completed_generations > cfg.train.generations {
            return Err(HarnessError::Config(format!(
                "{} records {} generations but train.generations is {}",
                checkpoint_path.display(),
                cp.completed_generations,
                cfg.train.generations
            )));
        }
        let mut table = load_qtable(&out.join(QTABLE_FILE))?;
        load_visits(&out.join(VISITS_FILE), &mut table)?;
        (table, cp.stats)
    } else {
        (QTable::new(grid.n_buckets(), deadlines.n_actions()), Vec::new())
    };
    let resumed_from = stats.len();

    let mut trainer = Trainer::resume(&plant, cfg.train, grid, deadlines, table, resumed_from)?;
    let save = |trainer: &Trainer<'_, OrbitPlant>, stats: &[GenerationStats]| -> Result<(), HarnessError> {
        save_qtable(&out.join(QTABLE_FILE), trainer.table())?;
        save_visits(&out.join(VISITS_FILE), trainer.table())?;
        write_csv(&out.join(LEARNING_CURVE_FILE), &LEARNING_CURVE_HEADER, curve_rows(stats))?;
        let cp =
            Checkpoint { fingerprint: fingerprint.clone(), completed_generations: stats.len(), stats: stats.to_vec() };
        write_atomic(&checkpoint_path, serde_json::to_string_pretty(&cp).expect("checkpoint serializes").as_bytes())
    };
    save(&trainer, &stats)?;
    while !trainer.is_finished() {
        let s = trainer.run_generation()?;
        on_generation(&s);
        stats.push(s);
        save(&trainer, &stats)?;
    }
    let table = trainer.into_table();
    write_policy(cfg, &table, &out.join(POLICY_FILE))?;
    Ok(TrainOutcome { table, stats, resumed_from })
}

fn build_policy(cfg: &RunConfig, source: &PolicySource) -> Result<(DeadlinePolicy, PolicyLabel), HarnessError> {
    let deadlines = cfg.deadline_grid()?;
    Ok(match source {
        PolicySource::Greedy => (DeadlinePolicy::Constant(deadlines.delta_max()), PolicyLabel::Greedy),
        PolicySource::Random => (DeadlinePolicy::Random(deadlines), PolicyLabel::Custom),
        PolicySource::Learned(path) => {
            let table = load_qtable(path)?;
            let grid = cfg.radius_grid()?;
            if table.n_states() != grid.n_buckets() || table.n_actions() != deadlines.n_actions() {
                return Err(HarnessError::Config(format!(
                    "{} is {} x {} but the configured grids are {} x {}",
                    path.display(),
                    table.n_states(),
                    table.n_actions(),
                    grid.n_buckets(),
                    deadlines.n_actions()
                )));
            }
            (DeadlinePolicy::Table { grid, deadlines: greedy_policy(&table, &deadlines) }, PolicyLabel::Learned)
        }
    })
}

/// Evaluation initial states: sampled like training, or all at one radius.
pub fn initial_states(plant: &OrbitPlant, n: usize, seed: u64, fixed_radius: Option<f64>) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let mut rng = episode_rng(seed, (usize::MAX >> 32) - 2, k);
            match fixed_radius {
                Some(m) => plant.random_state_at(m, &mut rng),
                None => plant.sample_initial_state(&mut rng),
            }
        })
        .collect()
}

fn trajectory_rows<'a>(
    scenario: &'a str,
    report: &'a EvalReport,
    radius: f64,
) -> impl Iterator<Item = TrajectoryRow<'a>> + 'a {
    report.trajectories.iter().map(move |t| TrajectoryRow {
        scenario,
        trajectory: t.index,
        initial_radius_over_r: t.initial_coordinate / radius,
        diet_h: t.diet,
        normalized_diet_h: t.normalized_diet,
        aiet_h: t.aiet,
        miet_h: t.miet,
        min_barrier_km2: t.min_barrier,
        max_intra_event_xi_km2: t.max_intra_event_xi,
        triggered_events: t.triggered_events,
        policy: report.label.as_str(),
    })
}

fn initial_state_rows<'a>(scenario: &'a str, states: &'a [Vec<f64>]) -> impl Iterator<Item = InitialStateRow<'a>> + 'a {
    states.iter().enumerate().map(move |(k, x)| InitialStateRow {
        scenario,
        trajectory: k,
        x: x[0],
        y: x[1],
        z: x[2],
        vx: x[3],
        vy: x[4],
        vz: x[5],
    })
}

fn scenario_name(fixed_radius: Option<f64>) -> String {
    match fixed_radius {
        Some(m) => format!("fixed_{m}R"),
        None => "sampled".to_string(),
    }
}

fn evaluation_file(label: PolicyLabel) -> String {
    format!("evaluation_{}.csv", label.as_str())
}

fn initial_states_file(label: PolicyLabel) -> String {
    format!("evaluation_{}_initial_states.csv", label.as_str())
}

/// Evaluates one policy on the orbital plant and writes per-trajectory CSVs.
pub fn cmd_evaluate(cfg: &RunConfig, out: &Path, source: &PolicySource) -> Result<EvalReport, HarnessError> {
    cfg.validate()?;
    let (policy, label) = build_policy(cfg, source)?;
    ensure_dir(out)?;
    let plant = cfg.build_plant()?;
    let seed = cfg.train.rng_seed;
    let states = initial_states(&plant, cfg.eval.n_trajectories, seed, cfg.eval.fixed_initial_radius);
    let report =
        evaluate_policy(&plant, &policy, label, &states, cfg.eval.events_per_trajectory, cfg.train.gamma, seed)?;
    let scenario = scenario_name(cfg.eval.fixed_initial_radius);
    let rows = trajectory_rows(&scenario, &report, cfg.body.mean_radius);
    write_csv(&out.join(evaluation_file(label)), &TRAJECTORY_HEADER, rows)?;
    write_csv(&out.join(initial_states_file(label)), &INITIAL_STATE_HEADER, initial_state_rows(&scenario, &states))?;
    Ok(report)
}

/// Runs two policies on identical initial states, overall and near the boundary.
#[allow(clippy::too_many_arguments)]
pub fn compare_policies<E: Environment>(
    env: &E,
    baseline: &DeadlinePolicy,
    candidate: &DeadlinePolicy,
    labels: (PolicyLabel, PolicyLabel),
    overall_states: &[Vec<f64>],
    boundary_states: &[Vec<f64>],
    events: usize,
    gamma: f64,
    seed: u64,
) -> Result<Comparison, HarnessError> {
    let run = |p: &DeadlinePolicy, l: PolicyLabel, s: &[Vec<f64>]| evaluate_policy(env, p, l, s, events, gamma, seed);
    Ok(Comparison {
        overall: (run(baseline, labels.0, overall_states)?, run(candidate, labels.1, overall_states)?),
        near_boundary: (run(baseline, labels.0, boundary_states)?, run(candidate, labels.1, boundary_states)?),
    })
}

/// Greedy versus learned on the configured sampler and at `eval.compare_radius`.
pub fn cmd_compare(cfg: &RunConfig, out: &Path, qtable: &Path) -> Result<Comparison, HarnessError> {
    cfg.validate()?;
    let (greedy, _) = build_policy(cfg, &PolicySource::Greedy)?;
    let (learned, _) = build_policy(cfg, &PolicySource::Learned(qtable.to_path_buf()))?;
    ensure_dir(out)?;
    let plant = cfg.build_plant()?;
    let seed = cfg.train.rng_seed;
    let n = cfg.eval.n_trajectories;
    let overall = initial_states(&plant, n, seed, cfg.eval.fixed_initial_radius);
    let boundary = initial_states(&plant, n, seed, Some(cfg.eval.compare_radius));
    let cmp = compare_policies(
        &plant,
        &greedy,
        &learned,
        (PolicyLabel::Greedy, PolicyLabel::Learned),
        &overall,
        &boundary,
        cfg.eval.events_per_trajectory,
        cfg.train.gamma,
        seed,
    )?;

    let overall_name = scenario_name(cfg.eval.fixed_initial_radius);
    let boundary_name = scenario_name(Some(cfg.eval.compare_radius));
    let scenarios = [(overall_name.as_str(), &cmp.overall), (boundary_name.as_str(), &cmp.near_boundary)];
    let summary = scenarios.iter().map(|(name, (g, l))| CompareRow {
        scenario: name,
        trajectories: g.trajectories.len(),
        greedy_mean_diet_h: g.mean_diet,
        learned_mean_diet_h: l.mean_diet,
        diet_ratio: l.mean_diet / g.mean_diet,
        greedy_mean_normalized_diet_h: (1.0 - g.gamma) * g.mean_diet,
        learned_mean_normalized_diet_h: (1.0 - l.gamma) * l.mean_diet,
        greedy_mean_aiet_h: g.mean_aiet,
        learned_mean_aiet_h: l.mean_aiet,
        min_barrier_km2: g.min_barrier.min(l.min_barrier),
    });
    write_csv(&out.join(COMPARE_FILE), &COMPARE_HEADER, summary)?;

    let r = cfg.body.mean_radius;
    let rows =
        scenarios.iter().flat_map(|&(name, (g, l))| trajectory_rows(name, g, r).chain(trajectory_rows(name, l, r)));
    write_csv(&out.join(COMPARE_TRAJECTORIES_FILE), &TRAJECTORY_HEADER, rows)?;
    let states = initial_state_rows(&overall_name, &overall).chain(initial_state_rows(&boundary_name, &boundary));
    write_csv(&out.join(COMPARE_INITIAL_STATES_FILE), &INITIAL_STATE_HEADER, states)?;
    Ok(cmp)
}

/// Simulates one trajectory and writes `(t, r/R, h, Ξ, event marker)` rows.
///
/// Each interval contributes its samples; the last sample of an interval is
/// the pre-jump state and carries `event = 1`.
pub fn cmd_simulate(
    cfg: &RunConfig,
    out: &Path,
    source: &PolicySource,
    x0: &InitialCondition,
    n_events: usize,
) -> Result<PathBuf, HarnessError> {
    cfg.validate()?;
    let (policy, _) = build_policy(cfg, source)?;
    let plant = cfg.build_plant()?;
    let seed = cfg.train.rng_seed;
    let mut rng = episode_rng(seed, (usize::MAX >> 32) - 3, 0);
    let state = match x0 {
        InitialCondition::Radius(m) => {
            let (lo, hi) = cfg.trigger.safe_band;
            if !(*m > lo && *m < hi) {
                return Err(HarnessError::Config(format!(
                    "initial radius {m} R lies outside the safe band ({lo}, {hi})"
                )));
            }
            plant.random_state_at(*m, &mut rng)
        }
        InitialCondition::State(x) => x.to_vec(),
    };
    if !(plant.xi(&state) < 0.0) {
        return Err(HarnessError::Config("initial state violates the trigger condition (Ξ ≥ 0)".into()));
    }
    if n_events == 0 {
        return Err(HarnessError::Config("simulate needs at least one event".into()));
    }
    ensure_dir(out)?;
    let log = simulate(&plant, &policy, &state, n_events, &mut rng)?;
    let r = cfg.body.mean_radius;
    let rows = log.events.iter().enumerate().flat_map(|(k, ev)| {
        let last = ev.samples.len() - 1;
        let plant = &plant;
        ev.samples.iter().enumerate().map(move |(i, (t, x))| {
            let end = i == last;
            SimulationRow {
                time_h: t / SECONDS_PER_HOUR,
                radius_over_r: OrbitPlant::radius(x) / r,
                barrier_km2: plant.barrier_value(x),
                trigger_km2: plant.trigger().evaluate(x, &ev.state_start),
                event: u8::from(end),
                event_index: k,
            }
        })
    });
    let path = out.join(SIMULATION_FILE);
    write_csv(&path, &SIMULATION_HEADER, rows)?;
    debug_assert!(log.events.iter().all(|e| e.cause == EventCause::DeadlineHit || e.cause == EventCause::TriggerFired));
    Ok(path)
}
