//! Barrier function of the radial safe band and the trigger built on it.

use serde::{Deserialize, Serialize};

use super::{BodyParams, SpacecraftState};

/// Parameters of the objective-based trigger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriggerConfig {
    /// Time constant of the linear class-K gain `α(z) = z / alpha_scale`, s.
    pub alpha_scale: f64,
    /// Constant margin absorbing the bounded disturbance term, km².
    pub margin: f64,
    /// Safe radii as multiples of the body radius.
    pub safe_band: (f64, f64),
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self { alpha_scale: 600.0, margin: 0.0005, safe_band: (1.6, 2.4) }
    }
}

impl TriggerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.alpha_scale > 0.0 && self.alpha_scale.is_finite()) {
            return Err(format!("trigger.alpha_scale must be positive, got {}", self.alpha_scale));
        }
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(format!("trigger.margin must be non-negative, got {}", self.margin));
        }
        let (lo, hi) = self.safe_band;
        if !(lo > 0.0 && lo < 2.0 && hi > 2.0 && hi.is_finite()) {
            return Err(format!("trigger.safe_band must satisfy 0 < lower < 2 < upper, got ({lo}, {hi})"));
        }
        Ok(())
    }

    fn center_and_half_width(&self, radius: f64) -> (f64, f64) {
        let (lo, hi) = self.safe_band;
        (0.5 * (lo + hi) * radius, 0.5 * (hi - lo) * radius)
    }

    /// Barrier value for this band; non-negative exactly inside it, km².
    pub fn barrier(&self, r: f64, body_radius: f64) -> f64 {
        let (c, w) = self.center_and_half_width(body_radius);
        w * w - (r - c) * (r - c)
    }

    /// Lie derivative of the barrier along the flow, km²/s.
    pub fn barrier_rate(&self, state: &SpacecraftState, body_radius: f64) -> f64 {
        let (c, _) = self.center_and_half_width(body_radius);
        -2.0 * (state.radius() - c) * state.radial_rate()
    }
}

/// `h(r) = (0.4R)² − (r − 2R)²` on the default band, km².
pub fn barrier_h(r: f64, body_radius: f64) -> f64 {
    let w = 0.4 * body_radius;
    let d = r - 2.0 * body_radius;
    w * w - d * d
}

/// Trigger value `Ξ = −(alpha_scale·L_f h + h) + margin`, km².
///
/// Negative while the scaled barrier condition `L_f h ≥ −h / alpha_scale`
/// holds with margin. Only the current state matters; the state at the last
/// event is accepted so that the signature matches the engine's trigger.
pub fn trigger_xi(
    state_now: &SpacecraftState,
    _state_last_event: &SpacecraftState,
    cfg: &TriggerConfig,
    body: &BodyParams,
) -> f64 {
    let r = state_now.radius();
    let h = cfg.barrier(r, body.mean_radius);
    -(cfg.alpha_scale * cfg.barrier_rate(state_now, body.mean_radius) + h) + cfg.margin
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    const R: f64 = 0.162;

    fn state(r: f64, radial: f64, tangential: f64) -> SpacecraftState {
        SpacecraftState::new(Vector3::new(r, 0.0, 0.0), Vector3::new(radial, tangential, 0.0), 0.0)
    }

    #[test]
    fn barrier_values() {
        assert_relative_eq!(barrier_h(2.0 * R, R), (0.4 * R).powi(2));
        assert!(barrier_h(1.6 * R, R).abs() < 1e-15);
        assert!(barrier_h(2.4 * R, R).abs() < 1e-15);
        assert_relative_eq!(barrier_h(2.2 * R, R), 0.00314928, max_relative = 1e-12);
        let cfg = TriggerConfig::default();
        for k in 0..50 {
            let r = R * (1.0 + 2.0 * k as f64 / 49.0);
            assert_relative_eq!(cfg.barrier(r, R), barrier_h(r, R), epsilon = 1e-15);
        }
    }

    #[test]
    fn circular_orbit_at_center_is_quiet() {
        let body = BodyParams::default();
        let s = state(2.0 * R, 0.0, body.circular_speed(2.0 * R));
        let xi = trigger_xi(&s, &s, &TriggerConfig::default(), &body);
        assert_relative_eq!(xi, -0.00369904, max_relative = 1e-9);
    }

    #[test]
    fn boundary_demands_an_event() {
        let body = BodyParams::default();
        let s = state(2.4 * R, 0.0, 1e-4);
        let xi = trigger_xi(&s, &s, &TriggerConfig::default(), &body);
        assert_relative_eq!(xi, 0.0005, max_relative = 1e-9);
    }

    #[test]
    fn outward_drift_raises_trigger() {
        let body = BodyParams::default();
        let cfg = TriggerConfig::default();
        let mut last = f64::NEG_INFINITY;
        for k in 0..10 {
            let s = state(2.2 * R, -2e-5 + 5e-6 * k as f64, 8e-5);
            let xi = trigger_xi(&s, &s, &cfg, &body);
            assert!(xi > last);
            last = xi;
        }
    }

    #[test]
    fn invalid_configs() {
        assert!(TriggerConfig { alpha_scale: 0.0, ..Default::default() }.validate().is_err());
        assert!(TriggerConfig { margin: -1.0, ..Default::default() }.validate().is_err());
        assert!(TriggerConfig { safe_band: (2.1, 2.4), ..Default::default() }.validate().is_err());
        assert!(TriggerConfig::default().validate().is_ok());
    }

    proptest! {
        #[test]
        fn barrier_sign_matches_band(m in 1.0f64..3.0) {
            let r = m * R;
            let inside = (1.6 * R..=2.4 * R).contains(&r);
            let h = barrier_h(r, R);
            if (m - 1.6).abs() > 1e-9 && (m - 2.4).abs() > 1e-9 {
                prop_assert_eq!(h >= 0.0, inside);
            }
        }

        #[test]
        fn trigger_is_continuous(
            m in 1.65f64..2.35, vr in -3e-5f64..3e-5, vt in 5e-5f64..1e-4,
            dx in -1.0f64..1.0, dy in -1.0f64..1.0, dv in -1.0f64..1.0,
        ) {
            let body = BodyParams::default();
            let cfg = TriggerConfig::default();
            let s = SpacecraftState::new(Vector3::new(m * R, 0.0, 0.01), Vector3::new(vr, vt, 0.0), 0.0);
            let base = trigger_xi(&s, &s, &cfg, &body);
            let mut prev_gap = f64::INFINITY;
            for k in 1..6 {
                let eps = 10f64.powi(-2 * k);
                let t = SpacecraftState::new(
                    s.position + eps * R * Vector3::new(dx, dy, 0.0),
                    s.velocity + eps * 1e-4 * Vector3::new(dv, 0.0, dv),
                    0.0,
                );
                let gap = (trigger_xi(&t, &t, &cfg, &body) - base).abs();
                if k >= 3 {
                    prop_assert!(gap <= prev_gap.max(1e-15));
                }
                prev_gap = gap;
            }
            prop_assert!(prev_gap < 1e-10);
        }
    }
}
