use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    apply_plan, plan_harvest, select_action, AlphaSchedule, DeadlineGrid, HarvestPlan, LearningError, QTable,
    RadiusGrid,
};
use crate::engine::{detect_event, diet, EngineError, FlowSpec, Trigger, VectorField, DEFAULT_EVENT_TOLERANCE};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

/// A plant the learner can drive: flow, trigger, jump, initial-state sampler
/// and the scalar coordinate that is bucketed into learner states.
pub trait Environment: Sync {
    type Field: VectorField + Sync;
    type Trig: Trigger + Sync;

    fn flow(&self) -> &FlowSpec<Self::Field>;
    fn trigger(&self) -> &Self::Trig;
    fn jump(&self, x: &[f64]) -> Result<Vec<f64>, BoxError>;
    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> Vec<f64>;
    fn bucket_coordinate(&self, x: &[f64]) -> f64;

    /// Safety witness, non-negative on the safe set.
    fn barrier(&self, _x: &[f64]) -> f64 {
        f64::INFINITY
    }

    fn event_tolerance(&self) -> f64 {
        DEFAULT_EVENT_TOLERANCE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub gamma: f64,
    pub generations: usize,
    pub episodes_per_generation: usize,
    pub events_per_episode: usize,
    pub alpha_schedule: AlphaSchedule,
    pub epsilon_initial: f64,
    /// Multiplier applied to ε after every generation.
    pub epsilon_decay: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            gamma: 0.9,
            generations: 180,
            episodes_per_generation: 100,
            events_per_episode: 20,
            alpha_schedule: AlphaSchedule::VisitDecay,
            epsilon_initial: 0.3,
            epsilon_decay: 0.97,
            rng_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), LearningError> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(LearningError::Config(format!("train.gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.episodes_per_generation == 0 {
            return Err(LearningError::Config("train.episodes_per_generation must be positive".into()));
        }
        if self.events_per_episode == 0 {
            return Err(LearningError::Config("train.events_per_episode must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.epsilon_initial) {
            return Err(LearningError::Config(format!(
                "train.epsilon_initial must lie in [0, 1], got {}",
                self.epsilon_initial
            )));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return Err(LearningError::Config(format!(
                "train.epsilon_decay must lie in (0, 1], got {}",
                self.epsilon_decay
            )));
        }
        self.alpha_schedule.validate()
    }

    pub fn epsilon_at(&self, generation: usize) -> f64 {
        self.epsilon_initial * self.epsilon_decay.powi(generation as i32)
    }
}

/// Per-generation learning-curve entry; DIET in hours.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub mean_diet: f64,
    pub min_diet: f64,
    pub max_diet: f64,
    pub epsilon: f64,
    pub mean_alpha: f64,
}

/// Independent stream for one episode of one generation.
pub fn episode_rng(seed: u64, generation: usize, episode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((generation as u64) << 32) | episode as u64);
    rng
}

struct EpisodeOutcome {
    diet: f64,
    plans: Vec<HarvestPlan>,
}

/// Generation-by-generation Q-learning driver.
///
/// Episodes of a generation run concurrently against the table as it stood at
/// the start of the generation; their updates are applied afterwards in
/// episode order, so results depend only on the seed.
pub struct Trainer<'a, E> {
    env: &'a E,
    config: TrainConfig,
    grid: RadiusGrid,
    deadlines: DeadlineGrid,
    table: QTable,
    next_generation: usize,
}

impl<'a, E: Environment> Trainer<'a, E> {
    pub fn new(
        env: &'a E,
        config: TrainConfig,
        grid: RadiusGrid,
        deadlines: DeadlineGrid,
    ) -> Result<Self, LearningError> {
        let table = QTable::new(grid.n_buckets(), deadlines.n_actions());
        Self::resume(env, config, grid, deadlines, table, 0)
    }

    /// Continues from `table` with `completed` generations already done.
    pub fn resume(
        env: &'a E,
        config: TrainConfig,
        grid: RadiusGrid,
        deadlines: DeadlineGrid,
        table: QTable,
        completed: usize,
    ) -> Result<Self, LearningError> {
        config.validate()?;
        if table.n_states() != grid.n_buckets() || table.n_actions() != deadlines.n_actions() {
            return Err(LearningError::Config(format!(
                "table is {} x {} but grids are {} x {}",
                table.n_states(),
                table.n_actions(),
                grid.n_buckets(),
                deadlines.n_actions()
            )));
        }
        Ok(Self { env, config, grid, deadlines, table, next_generation: completed })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn into_table(self) -> QTable {
        self.table
    }

    pub fn completed_generations(&self) -> usize {
        self.next_generation
    }

    pub fn is_finished(&self) -> bool {
        self.next_generation >= self.config.generations
    }

    pub fn run_generation(&mut self) -> Result<GenerationStats, LearningError> {
        let generation = self.next_generation;
        let epsilon = self.config.epsilon_at(generation);
        let snapshot = &self.table;
        let outcomes: Vec<Result<EpisodeOutcome, LearningError>> = (0..self.config.episodes_per_generation)
            .into_par_iter()
            .map(|episode| {
                let mut rng = episode_rng(self.config.rng_seed, generation, episode);
                self.run_episode(snapshot, epsilon, &mut rng).map_err(|source| LearningError::Episode {
                    generation,
                    episode,
                    source,
                })
            })
            .collect();

        let mut diets = Vec::with_capacity(outcomes.len());
        let (mut alpha_sum, mut updates) = (0.0, 0usize);
        for outcome in outcomes {
            let outcome = outcome?;
            for plan in &outcome.plans {
                let (s, n) =
                    apply_plan(&mut self.table, plan, &self.deadlines, &self.config.alpha_schedule, self.config.gamma)?;
                alpha_sum += s;
                updates += n;
            }
            diets.push(outcome.diet);
        }
        self.next_generation += 1;
        Ok(GenerationStats {
            generation,
            mean_diet: diets.iter().sum::<f64>() / diets.len() as f64,
            min_diet: diets.iter().copied().fold(f64::INFINITY, f64::min),
            max_diet: diets.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            epsilon,
            mean_alpha: if updates == 0 { 0.0 } else { alpha_sum / updates as f64 },
        })
    }

    fn bucket(&self, x: &[f64]) -> usize {
        self.grid.bucket_of(self.env.bucket_coordinate(x))
    }

    fn run_episode(&self, table: &QTable, epsilon: f64, rng: &mut ChaCha8Rng) -> Result<EpisodeOutcome, BoxError> {
        let env = self.env;
        let tolerance = env.event_tolerance();
        let mut x = env.sample_initial_state(rng);
        let mut t = 0.0;
        let n = self.config.events_per_episode;
        let mut taus = Vec::with_capacity(n);
        let mut plans = Vec::with_capacity(n);
        for index in 0..n {
            let at = |source: EngineError| EngineError::AtEvent { index, source: Box::new(source) };
            let action = select_action(table, self.bucket(&x), epsilon, rng);
            let deadline = self.deadlines.entries()[action];
            let event = detect_event(env.flow(), env.trigger(), &x, t, deadline, tolerance).map_err(at)?;
            plans.push(plan_harvest(&event, &self.deadlines, |y| self.bucket(y), tolerance)?);
            taus.push(event.duration());
            x = env.jump(&event.state_end_pre_jump).map_err(|e| at(EngineError::Jump(e)))?;
            t = event.t_end;
        }
        Ok(EpisodeOutcome { diet: diet(&taus, self.config.gamma)?, plans })
    }
}

/// Runs every configured generation from a zero table.
pub fn train<E: Environment>(
    env: &E,
    config: TrainConfig,
    grid: RadiusGrid,
    deadlines: DeadlineGrid,
) -> Result<(QTable, Vec<GenerationStats>), LearningError> {
    let mut trainer = Trainer::new(env, config, grid, deadlines)?;
    let mut stats = Vec::with_capacity(config.generations);
    while !trainer.is_finished() {
        stats.push(trainer.run_generation()?);
    }
    Ok((trainer.into_table(), stats))
}
