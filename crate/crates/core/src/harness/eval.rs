use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;

use crate::engine::{aiet, diet, miet, run_episode, tau_sequence, EpisodeLog, EventCause, Trigger};
use crate::learning::{episode_rng, BoxError, DeadlineGrid, Environment, RadiusGrid};

use super::HarnessError;

/// Deadline assignment used during evaluation.
#[derive(Debug, Clone)]
pub enum DeadlinePolicy {
    /// Always the same deadline; the greedy scheme uses `δ_max`.
    Constant(f64),
    /// Per-bucket deadlines, e.g. from a learned table.
    Table { grid: RadiusGrid, deadlines: Vec<f64> },
    /// Uniform draw from the grid at every event.
    Random(DeadlineGrid),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyLabel {
    Greedy,
    Learned,
    Custom,
}

impl PolicyLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyLabel::Greedy => "greedy",
            PolicyLabel::Learned => "learned",
            PolicyLabel::Custom => "custom",
        }
    }
}

impl DeadlinePolicy {
    fn deadline(&self, coordinate: f64, rng: &mut dyn RngCore) -> f64 {
        match self {
            DeadlinePolicy::Constant(d) => *d,
            DeadlinePolicy::Table { grid, deadlines } => deadlines[grid.bucket_of(coordinate)],
            DeadlinePolicy::Random(g) => g.entries()[rng.random_range(0..g.n_actions())],
        }
    }
}

/// Metrics of one closed-loop trajectory; times in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryMetrics {
    pub index: usize,
    pub initial_coordinate: f64,
    pub diet: f64,
    pub normalized_diet: f64,
    pub aiet: f64,
    pub miet: f64,
    pub min_barrier: f64,
    /// Largest trigger value over samples strictly inside event intervals.
    pub max_intra_event_xi: f64,
    pub triggered_events: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub label: PolicyLabel,
    pub gamma: f64,
    pub trajectories: Vec<TrajectoryMetrics>,
    pub mean_diet: f64,
    pub min_diet: f64,
    pub max_diet: f64,
    pub mean_aiet: f64,
    pub mean_miet: f64,
    pub min_barrier: f64,
    pub max_intra_event_xi: f64,
}

impl EvalReport {
    fn from_trajectories(label: PolicyLabel, gamma: f64, trajectories: Vec<TrajectoryMetrics>) -> Self {
        let n = trajectories.len() as f64;
        let mean = |f: fn(&TrajectoryMetrics) -> f64| trajectories.iter().map(f).sum::<f64>() / n;
        Self {
            label,
            gamma,
            mean_diet: mean(|t| t.diet),
            min_diet: trajectories.iter().map(|t| t.diet).fold(f64::INFINITY, f64::min),
            max_diet: trajectories.iter().map(|t| t.diet).fold(f64::NEG_INFINITY, f64::max),
            mean_aiet: mean(|t| t.aiet),
            mean_miet: mean(|t| t.miet),
            min_barrier: trajectories.iter().map(|t| t.min_barrier).fold(f64::INFINITY, f64::min),
            max_intra_event_xi: trajectories.iter().map(|t| t.max_intra_event_xi).fold(f64::NEG_INFINITY, f64::max),
            trajectories,
        }
    }
}

/// Initial states for an evaluation batch; trajectory `k` uses its own stream.
pub fn sample_initial_states<E: Environment>(env: &E, n: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..n).map(|k| env.sample_initial_state(&mut episode_rng(seed, usize::MAX >> 32, k))).collect()
}

/// Runs one closed-loop trajectory and returns its full log.
pub fn simulate<E: Environment>(
    env: &E,
    policy: &DeadlinePolicy,
    x0: &[f64],
    n_events: usize,
    rng: &mut dyn RngCore,
) -> Result<EpisodeLog, HarnessError> {
    let mut log = run_episode(
        env.flow(),
        env.trigger(),
        |x: &[f64]| env.jump(x),
        |x: &[f64]| policy.deadline(env.bucket_coordinate(x), rng),
        x0,
        0.0,
        n_events,
        env.event_tolerance(),
    )?;
    log.record_barrier(|x| env.barrier(x));
    Ok(log)
}

fn trajectory_metrics<E: Environment>(
    env: &E,
    log: &EpisodeLog,
    index: usize,
    gamma: f64,
) -> Result<TrajectoryMetrics, HarnessError> {
    let taus = tau_sequence(log);
    let d = diet(&taus, gamma)?;
    let mut max_xi = f64::NEG_INFINITY;
    for ev in &log.events {
        for (t, x) in ev.samples.iter() {
            if ev.cause == EventCause::TriggerFired && t >= ev.t_end {
                continue;
            }
            max_xi = max_xi.max(env.trigger().evaluate(x, &ev.state_start));
        }
    }
    Ok(TrajectoryMetrics {
        index,
        initial_coordinate: env.bucket_coordinate(&log.initial_state),
        diet: d,
        normalized_diet: (1.0 - gamma) * d,
        aiet: aiet(&taus)?,
        miet: miet(&taus)?,
        min_barrier: log.min_barrier_value,
        max_intra_event_xi: max_xi,
        triggered_events: log.events.iter().filter(|e| e.cause == EventCause::TriggerFired).count(),
    })
}

/// Evaluates `policy` from each initial state; trajectories run in parallel.
pub fn evaluate_policy<E: Environment>(
    env: &E,
    policy: &DeadlinePolicy,
    label: PolicyLabel,
    initial_states: &[Vec<f64>],
    events_per_trajectory: usize,
    gamma: f64,
    seed: u64,
) -> Result<EvalReport, HarnessError> {
    if initial_states.is_empty() {
        return Err(HarnessError::Config("evaluation needs at least one trajectory".into()));
    }
    let trajectories = initial_states
        .par_iter()
        .enumerate()
        .map(|(k, x0)| {
            let mut rng = episode_rng(seed, (usize::MAX >> 32) - 1, k);
            let log = simulate(env, policy, x0, events_per_trajectory, &mut rng)
                .map_err(|e| HarnessError::Trajectory { index: k, source: Box::new(e) as BoxError })?;
            trajectory_metrics(env, &log, k, gamma)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EvalReport::from_trajectories(label, gamma, trajectories))
}
