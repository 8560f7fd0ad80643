//! Station keeping around a small rotating body: gravity model, barrier
//! trigger, conic re-injection and the plant bindings used by the learner.

mod barrier;
mod body;
mod injection;
mod plant;

pub use barrier::{barrier_h, trigger_xi, TriggerConfig};
pub use body::{acceleration, degree_two_potential, BodyParams, OrbitalField, SpacecraftState, MIN_RADIUS};
pub use injection::{
    conic_elements, impulse_policy, injection_anomaly, safety_factor, target_radius, ConicInjection, ANOMALY_SATURATION,
};
pub use plant::{IntegratorConfig, OrbitPlant, OrbitTrigger};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OrbitError {
    #[error("radius {radius} km is below the singularity threshold")]
    Singularity { radius: f64 },
    #[error("position and velocity are parallel; orbital plane undefined")]
    DegeneratePlane,
    #[error("degenerate injection geometry (denominator {denominator} km)")]
    DegenerateGeometry { denominator: f64 },
    #[error("injection eccentricity {eccentricity} outside [0, 1)")]
    InvalidInjection { eccentricity: f64 },
}
