//! Generic impulsive-system engine: flow integration, deadline-augmented event
//! detection, closed-loop episodes and inter-event time metrics.

mod event;
mod integrator;
mod metrics;

pub use event::{detect_event, run_episode, EpisodeLog, EventCause, EventRecord, Trigger, DEFAULT_EVENT_TOLERANCE};
pub use integrator::{integrate_flow, FlowSpec, FnField, Stepper, Trajectory, VectorField};
pub use metrics::{aiet, diet, miet, tau_sequence, SECONDS_PER_HOUR};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("integration failed: non-finite derivative or step underflow at t = {time} s")]
    IntegrationFailure { time: f64 },
    #[error("trigger is non-negative at the start of an interval (Ξ = {value} at t = {time} s)")]
    InvalidStart { value: f64, time: f64 },
    #[error("state dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("jump map failed: {0}")]
    Jump(Box<dyn std::error::Error + Send + Sync>),
    #[error("event {index}: {source}")]
    AtEvent {
        index: usize,
        #[source]
        source: Box<EngineError>,
    },
}
