//! Impulse policy: re-inject the spacecraft into a conic whose peri- or
//! apoapsis sits at a target radius biased toward the middle of the band.

use std::f64::consts::PI;

use nalgebra::Vector3;

use super::{BodyParams, OrbitError, SpacecraftState};

/// Safety factor at which the outbound branch of the injection anomaly saturates.
///
/// For `S > 1/2` the unsaturated anomaly approaches periapsis while the
/// spacecraft is still far above the target periapsis radius, and no ellipse
/// through the current radius exists (`e ≥ 1` from about `S ≈ 0.71`). Holding
/// `ν = −π/2` keeps `0 ≤ e ≤ 1/3` over the whole band.
pub const ANOMALY_SATURATION: f64 = 0.5;

const DEGENERATE_DENOMINATOR: f64 = 1e-12;

/// Conic the spacecraft is injected into at an event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConicInjection {
    pub target_radius: f64,
    pub true_anomaly: f64,
    pub eccentricity: f64,
    pub semi_latus_rectum: f64,
    pub new_velocity: Vector3<f64>,
}

/// `S = (r − 2R) / (0.4R)`: −1 and 1 on the band edges, 0 in the middle.
pub fn safety_factor(r: f64, body_radius: f64) -> f64 {
    (r - 2.0 * body_radius) / (0.4 * body_radius)
}

/// `r_tgt = 2R − 0.2R·S = 3R − 0.5r`.
pub fn target_radius(r: f64, body_radius: f64) -> f64 {
    3.0 * body_radius - 0.5 * r
}

/// True anomaly on the new conic: `−π + πS` for `S > 0`, `−(π/2)S` otherwise.
pub fn injection_anomaly(s: f64) -> f64 {
    if s > 0.0 {
        -PI + PI * s
    } else {
        -0.5 * PI * s
    }
}

fn sign(s: f64) -> f64 {
    if s > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Eccentricity and semi-latus rectum of the conic through radius `r` at
/// anomaly `nu` whose periapsis (`S > 0`) or apoapsis (`S ≤ 0`) is `r_tgt`.
pub fn conic_elements(r: f64, r_tgt: f64, nu: f64, s: f64) -> Result<(f64, f64), OrbitError> {
    let sgn = sign(s);
    let denominator = sgn * r_tgt - r * nu.cos();
    if denominator.abs() < DEGENERATE_DENOMINATOR {
        return Err(OrbitError::DegenerateGeometry { denominator });
    }
    let mut e = (r - r_tgt) / denominator;
    if e < 0.0 && e > -1e-12 {
        e = 0.0;
    }
    if !(0.0..1.0).contains(&e) {
        return Err(OrbitError::InvalidInjection { eccentricity: e });
    }
    Ok((e, r_tgt * (1.0 + sgn * e)))
}

/// Velocity change that places the spacecraft on the injection conic.
///
/// The perifocal basis is built in the current orbital plane so that the
/// present position sits at true anomaly `ν` and the sense of rotation is kept.
pub fn impulse_policy(
    state: &SpacecraftState,
    body: &BodyParams,
) -> Result<(Vector3<f64>, ConicInjection), OrbitError> {
    let r = state.radius();
    if !(r >= super::MIN_RADIUS) {
        return Err(OrbitError::Singularity { radius: r });
    }
    let big_r = body.mean_radius;
    let s = safety_factor(r, big_r);
    let r_tgt = target_radius(r, big_r);
    let nu = injection_anomaly(s.min(ANOMALY_SATURATION));
    let (e, p) = conic_elements(r, r_tgt, nu, s)?;

    let h = state.angular_momentum();
    let h_norm = h.norm();
    if !(h_norm > 1e-12 * r * state.velocity.norm()) || h_norm == 0.0 {
        return Err(OrbitError::DegeneratePlane);
    }
    let u_r = state.position / r;
    let u_h = h / h_norm;
    let u_theta = u_h.cross(&u_r);
    let (sin_nu, cos_nu) = nu.sin_cos();
    let p_hat = cos_nu * u_r - sin_nu * u_theta;
    let q_hat = sin_nu * u_r + cos_nu * u_theta;
    let v_plus = (body.mu / p).sqrt() * (-sin_nu * p_hat + (e + cos_nu) * q_hat);

    Ok((
        v_plus - state.velocity,
        ConicInjection {
            target_radius: r_tgt,
            true_anomaly: nu,
            eccentricity: e,
            semi_latus_rectum: p,
            new_velocity: v_plus,
        },
    ))
}
