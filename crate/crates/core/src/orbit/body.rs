use std::f64::consts::TAU;

use nalgebra::{Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use super::OrbitError;
use crate::engine::VectorField;

/// Radii below this are treated as a collision with the point mass, km.
pub const MIN_RADIUS: f64 = 1e-6;

/// Position, velocity and epoch of the orbiting vehicle (km, km/s, s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpacecraftState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub time: f64,
}

impl SpacecraftState {
    pub fn new(position: Vector3<f64>, velocity: Vector3<f64>, time: f64) -> Self {
        Self { position, velocity, time }
    }

    /// Reads `[x, y, z, vx, vy, vz]`.
    pub fn from_slice(x: &[f64], time: f64) -> Self {
        Self { position: Vector3::new(x[0], x[1], x[2]), velocity: Vector3::new(x[3], x[4], x[5]), time }
    }

    pub fn to_array(&self) -> [f64; 6] {
        let (r, v) = (self.position, self.velocity);
        [r.x, r.y, r.z, v.x, v.y, v.z]
    }

    pub fn radius(&self) -> f64 {
        self.position.norm()
    }

    /// `r⃗·v⃗ / r`, the rate of change of the radius.
    pub fn radial_rate(&self) -> f64 {
        self.position.dot(&self.velocity) / self.radius()
    }

    pub fn specific_energy(&self, mu: f64) -> f64 {
        0.5 * self.velocity.norm_squared() - mu / self.radius()
    }

    pub fn angular_momentum(&self) -> Vector3<f64> {
        self.position.cross(&self.velocity)
    }
}

/// Physical parameters of the central body.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BodyParams {
    /// Gravitational parameter, km³/s².
    pub mu: f64,
    /// Mean body radius, km.
    pub mean_radius: f64,
    /// Sidereal rotation period, s.
    pub rotation_period: f64,
    /// Unnormalized second-degree zonal coefficient.
    pub c20: f64,
    /// Unnormalized second-degree sectoral coefficient.
    pub c22: f64,
}

impl Default for BodyParams {
    /// Asteroid 25143 Itokawa.
    fn default() -> Self {
        Self { mu: 2.36e-9, mean_radius: 0.162, rotation_period: 12.132 * 3600.0, c20: -0.11, c22: 0.04 }
    }
}

impl BodyParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(format!("body.mu must be positive, got {}", self.mu));
        }
        if !(self.mean_radius > 0.0 && self.mean_radius.is_finite()) {
            return Err(format!("body.mean_radius must be positive, got {}", self.mean_radius));
        }
        if !(self.rotation_period > 0.0 && self.rotation_period.is_finite()) {
            return Err(format!("body.rotation_period must be positive, got {}", self.rotation_period));
        }
        if !(self.c20.is_finite() && self.c22.is_finite()) {
            return Err("body.c20 and body.c22 must be finite".into());
        }
        Ok(())
    }

    pub fn circular_speed(&self, radius: f64) -> f64 {
        (self.mu / radius).sqrt()
    }

    pub fn orbital_period(&self, radius: f64) -> f64 {
        TAU * (radius.powi(3) / self.mu).sqrt()
    }

    /// Body-fixed longitude of the inertial x axis at `time`.
    pub fn rotation_angle(&self, time: f64) -> f64 {
        TAU * time / self.rotation_period
    }
}

/// Degree-2 potential in the body-fixed frame, excluding the point-mass term.
pub fn degree_two_potential(body: &BodyParams, r_fixed: &Vector3<f64>) -> f64 {
    let (x, y, z) = (r_fixed.x, r_fixed.y, r_fixed.z);
    let r2 = r_fixed.norm_squared();
    let r5 = r2 * r2 * r2.sqrt();
    let k = body.mu * body.mean_radius.powi(2);
    k * body.c20 * (3.0 * z * z - r2) / (2.0 * r5) + 3.0 * k * body.c22 * (x * x - y * y) / r5
}

/// Gradient of [`degree_two_potential`], body-fixed axes.
fn degree_two_acceleration(body: &BodyParams, r_fixed: &Vector3<f64>) -> Vector3<f64> {
    let (x, y, z) = (r_fixed.x, r_fixed.y, r_fixed.z);
    let r2 = r_fixed.norm_squared();
    let r7 = r2 * r2 * r2 * r2.sqrt();
    let k = body.mu * body.mean_radius.powi(2);

    let zonal = 0.5 * k * body.c20 / r7;
    let zonal_xy = zonal * (3.0 * r2 - 15.0 * z * z);
    let a20 = Vector3::new(zonal_xy * x, zonal_xy * y, zonal * (9.0 * r2 - 15.0 * z * z) * z);

    let m = 3.0 * k * body.c22 / r7;
    let q = 5.0 * (x * x - y * y);
    let a22 = Vector3::new(m * x * (2.0 * r2 - q), -m * y * (2.0 * r2 + q), -m * z * q);

    a20 + a22
}

/// Gravitational acceleration on the spacecraft, km/s².
///
/// The point-mass term is always present. With `enable_disturbance`, the
/// degree-2 field of the rotating body is added, evaluated in body-fixed axes
/// at longitude `2πt / rotation_period` and rotated back to inertial axes.
pub fn acceleration(
    state: &SpacecraftState,
    body: &BodyParams,
    enable_disturbance: bool,
) -> Result<Vector3<f64>, OrbitError> {
    let r = state.radius();
    if !(r >= MIN_RADIUS) {
        return Err(OrbitError::Singularity { radius: r });
    }
    let central = -body.mu / (r * r * r) * state.position;
    if !enable_disturbance || (body.c20 == 0.0 && body.c22 == 0.0) {
        return Ok(central);
    }
    let spin = Rotation3::from_axis_angle(&Vector3::z_axis(), body.rotation_angle(state.time));
    let r_fixed = spin.inverse_transform_vector(&state.position);
    Ok(central + spin.transform_vector(&degree_two_acceleration(body, &r_fixed)))
}

/// Two-body flow with optional rotating degree-2 disturbance, state `[r⃗, v⃗]`.
#[derive(Debug, Clone, Copy)]
pub struct OrbitalField {
    pub body: BodyParams,
    pub disturbance: bool,
}

impl VectorField for OrbitalField {
    fn dimension(&self) -> usize {
        6
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let state = SpacecraftState::from_slice(x, t);
        dx[..3].copy_from_slice(&x[3..6]);
        match acceleration(&state, &self.body, self.disturbance) {
            Ok(a) => dx[3..].copy_from_slice(a.as_slice()),
            // Reported by the integrator as a failure at this time.
            Err(_) => dx[3..].fill(f64::NAN),
        }
    }
}
