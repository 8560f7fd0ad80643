//! Optimization layer: discretization, tabular Q-learning with multi-action
//! harvesting, and the generation/episode training loop.

mod grid;
mod harvest;
mod table;
mod train;

pub use grid::{DeadlineGrid, RadiusGrid};
pub use harvest::{apply_plan, harvest_event, plan_harvest, HarvestPlan, TailUpdate};
pub use table::{greedy_policy, select_action, AlphaSchedule, QTable};
pub use train::{episode_rng, train, BoxError, Environment, GenerationStats, TrainConfig, Trainer};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LearningError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{what} index {index} out of range (size {len})")]
    Index { what: &'static str, index: usize, len: usize },
    #[error("state requested at t = {time} s outside the event span [{start}, {end}]")]
    Interpolation { time: f64, start: f64, end: f64 },
    #[error("generation {generation}, episode {episode}: {source}")]
    Episode {
        generation: usize,
        episode: usize,
        #[source]
        source: BoxError,
    },
}
