use std::f64::consts::TAU;

use nalgebra::Vector3;
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{impulse_policy, trigger_xi, BodyParams, OrbitError, OrbitalField, SpacecraftState, TriggerConfig};
use crate::engine::{FlowSpec, Trigger};
use crate::learning::{BoxError, Environment};

/// Step-size control for orbit propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    /// Largest accepted step, also the spacing bound of retained samples, s.
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { max_step: 60.0, rel_tol: 1e-10, abs_tol: 1e-14 }
    }
}

/// Barrier trigger on flat `[r⃗, v⃗]` states.
#[derive(Debug, Clone, Copy)]
pub struct OrbitTrigger {
    pub body: BodyParams,
    pub config: TriggerConfig,
}

impl Trigger for OrbitTrigger {
    fn evaluate(&self, x: &[f64], x_last_event: &[f64]) -> f64 {
        trigger_xi(
            &SpacecraftState::from_slice(x, 0.0),
            &SpacecraftState::from_slice(x_last_event, 0.0),
            &self.config,
            &self.body,
        )
    }
}

/// Closed-loop orbital plant: flow with optional disturbance, barrier
/// trigger, conic re-injection at every event.
#[derive(Debug, Clone)]
pub struct OrbitPlant {
    flow: FlowSpec<OrbitalField>,
    trigger: OrbitTrigger,
    /// Radii of random initial states, multiples of R.
    pub initial_band: (f64, f64),
    /// Relative spread of the initial tangential speed around circular speed.
    pub speed_spread: f64,
}

impl OrbitPlant {
    pub fn new(
        body: BodyParams,
        trigger: TriggerConfig,
        disturbance: bool,
        integrator: IntegratorConfig,
    ) -> Result<Self, String> {
        body.validate()?;
        trigger.validate()?;
        let flow = FlowSpec::new(
            OrbitalField { body, disturbance },
            integrator.max_step,
            integrator.rel_tol,
            integrator.abs_tol,
        )
        .map_err(|e| e.to_string())?;
        Ok(Self { flow, trigger: OrbitTrigger { body, config: trigger }, initial_band: (1.7, 2.3), speed_spread: 0.05 })
    }

    pub fn body(&self) -> &BodyParams {
        &self.trigger.body
    }

    pub fn trigger_config(&self) -> &TriggerConfig {
        &self.trigger.config
    }

    pub fn orbit_flow(&self) -> &FlowSpec<OrbitalField> {
        &self.flow
    }

    pub fn radius(x: &[f64]) -> f64 {
        Vector3::new(x[0], x[1], x[2]).norm()
    }

    pub fn barrier_value(&self, x: &[f64]) -> f64 {
        self.trigger.config.barrier(Self::radius(x), self.body().mean_radius)
    }

    pub fn xi(&self, x: &[f64]) -> f64 {
        self.trigger.evaluate(x, x)
    }

    /// State after the impulse; position is unchanged.
    pub fn apply_impulse(&self, x: &[f64]) -> Result<Vec<f64>, OrbitError> {
        let state = SpacecraftState::from_slice(x, 0.0);
        let (_, injection) = impulse_policy(&state, self.body())?;
        let v = injection.new_velocity;
        Ok(vec![x[0], x[1], x[2], v.x, v.y, v.z])
    }

    /// Radius `radius_multiple·R` in a random plane with a random in-plane
    /// direction; tangential speed within the configured spread of circular.
    pub fn random_state_at(&self, radius_multiple: f64, rng: &mut dyn RngCore) -> Vec<f64> {
        let r = radius_multiple * self.body().mean_radius;
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi = rng.random::<f64>() * TAU;
        let rho = (1.0 - z * z).max(0.0).sqrt();
        let normal = Vector3::new(rho * phi.cos(), rho * phi.sin(), z);
        let seed = if normal.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
        let e1 = normal.cross(&seed).normalize();
        let e2 = normal.cross(&e1);
        let theta = rng.random::<f64>() * TAU;
        let u_r = theta.cos() * e1 + theta.sin() * e2;
        let factor = 1.0 + self.speed_spread * (2.0 * rng.random::<f64>() - 1.0);
        let v = self.body().circular_speed(r) * factor * normal.cross(&u_r);
        let p = r * u_r;
        vec![p.x, p.y, p.z, v.x, v.y, v.z]
    }
}

impl Environment for OrbitPlant {
    type Field = OrbitalField;
    type Trig = OrbitTrigger;

    fn flow(&self) -> &FlowSpec<OrbitalField> {
        &self.flow
    }

    fn trigger(&self) -> &OrbitTrigger {
        &self.trigger
    }

    fn jump(&self, x: &[f64]) -> Result<Vec<f64>, BoxError> {
        Ok(self.apply_impulse(x)?)
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let (lo, hi) = self.initial_band;
        let m = lo + (hi - lo) * rng.random::<f64>();
        self.random_state_at(m, rng)
    }

    fn bucket_coordinate(&self, x: &[f64]) -> f64 {
        Self::radius(x)
    }

    fn barrier(&self, x: &[f64]) -> f64 {
        self.barrier_value(x)
    }
}
