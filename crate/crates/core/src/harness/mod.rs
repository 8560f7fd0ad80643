//! Batch experiment layer: configuration, persistence, evaluation and the
//! train / evaluate / compare / simulate commands.

mod commands;
mod config;
mod eval;
pub mod io;

pub use commands::*;
pub use config::{EvalConfig, GridConfig, PlantConfig, RunConfig};
pub use eval::{
    evaluate_policy, sample_initial_states, simulate, DeadlinePolicy, EvalReport, PolicyLabel, TrajectoryMetrics,
};

use std::path::PathBuf;

use thiserror::Error;

use crate::engine::EngineError;
use crate::learning::{BoxError, LearningError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: byte offset {offset}: {message}")]
    Format { path: PathBuf, offset: u64, message: String },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Learning(#[from] LearningError),
    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: BoxError,
    },
}

impl HarnessError {
    /// Stable category name for machine-readable diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Config(_) => "config",
            HarnessError::Io { .. } => "io",
            HarnessError::Format { .. } => "format",
            HarnessError::Engine(_) => "simulation",
            HarnessError::Learning(LearningError::Config(_)) => "config",
            HarnessError::Learning(_) => "learning",
            HarnessError::Trajectory { .. } => "simulation",
        }
    }
}
