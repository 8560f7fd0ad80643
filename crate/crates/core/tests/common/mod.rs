//! Oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use etc_deadline::engine::{detect_event, run_episode, EventCause, EventRecord, DEFAULT_EVENT_TOLERANCE};
use etc_deadline::learning::{AlphaSchedule, DeadlineGrid, QTable};
use etc_deadline::synthetic::level;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Value iteration for the three-bucket process, transitions derived by hand:
/// starting mid-hour in bucket b the interval lasts min(τ_b, δ_a) and ends in
/// bucket (b + floor((1800 + elapsed) / 3600)) mod 3.
pub fn value_iteration(intervals: [f64; 3], deadlines: &[f64], gamma: f64) -> Vec<Vec<f64>> {
    let mut q = vec![vec![0.0f64; deadlines.len()]; 3];
    for _ in 0..2000 {
        let v: Vec<f64> = q.iter().map(|row| row.iter().copied().fold(f64::MIN, f64::max)).collect();
        for b in 0..3 {
            for (a, &d) in deadlines.iter().enumerate() {
                let elapsed = intervals[b].min(d);
                let next = (b + ((1800.0 + elapsed) / 3600.0).floor() as usize) % 3;
                q[b][a] = elapsed / 3600.0 + gamma * v[next];
            }
        }
    }
    q
}

pub fn argmax_last(row: &[f64]) -> usize {
    let m = row.iter().copied().fold(f64::MIN, f64::max);
    row.iter().rposition(|&v| v == m).unwrap()
}

/// Event times of the level plant under (a) the base trigger with deadlines
/// `τ'(z)` and (b) the dominated trigger with an inactive deadline.
pub fn deadline_and_dominated_times(z0: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let flow = level::flow();
    let x0 = [0.0, z0];
    let with_deadline = run_episode(
        &flow,
        &level::trigger(),
        level::jump,
        |x: &[f64]| level::dominated_interval(x[1]),
        &x0,
        0.0,
        n,
        DEFAULT_EVENT_TOLERANCE,
    )
    .unwrap();
    let dominated = run_episode(
        &flow,
        &level::dominated_trigger(),
        level::jump,
        |_: &[f64]| 1e6,
        &x0,
        0.0,
        n,
        DEFAULT_EVENT_TOLERANCE,
    )
    .unwrap();
    (with_deadline.events.iter().map(|e| e.t_end).collect(), dominated.events.iter().map(|e| e.t_end).collect())
}

/// One random event on the level plant with its grid, bucket count and a
/// randomized starting table.
pub struct RandomEvent {
    pub event: EventRecord,
    pub deadlines: DeadlineGrid,
    pub n_states: usize,
    pub table: QTable,
}

pub fn bucket_of(n_states: usize) -> impl Fn(&[f64]) -> usize {
    move |x: &[f64]| ((x[0] * 0.37).floor().rem_euclid(n_states as f64)) as usize
}

pub fn random_event(seed: u64) -> RandomEvent {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_actions = rng.random_range(2..60);
    let n_states = rng.random_range(1..12);
    let lo = rng.random_range(0.2..4.0);
    let hi = lo * rng.random_range(1.5..8.0);
    let deadlines = DeadlineGrid::new(n_actions, lo, hi).unwrap();
    let z = rng.random_range(0.0..1.0);
    let c = rng.random_range(-20.0..20.0);
    let deadline = if rng.random_bool(0.5) {
        deadlines.entries()[rng.random_range(0..n_actions)]
    } else {
        rng.random_range(lo..hi)
    };
    let event = detect_event(&level::flow(), &level::trigger(), &[c, z], c, deadline, DEFAULT_EVENT_TOLERANCE).unwrap();
    let values = (0..n_states * n_actions).map(|_| rng.random_range(-5.0..30.0)).collect();
    let mut table = QTable::from_values(n_states, n_actions, values).unwrap();
    table.set_visits((0..n_states * n_actions).map(|_| rng.random_range(0..5)).collect()).unwrap();
    RandomEvent { event, deadlines, n_states, table }
}

/// The harvest rule written out as individual updates in ascending deadline order.
pub fn explicit_replay(
    table: &mut QTable,
    event: &EventRecord,
    deadlines: &DeadlineGrid,
    bucket: &impl Fn(&[f64]) -> usize,
    alpha: &AlphaSchedule,
    gamma: f64,
) {
    let s = bucket(&event.state_start);
    let tau = event.t_end - event.t_start;
    for (a, &d) in deadlines.entries().iter().enumerate() {
        let observed = match event.cause {
            EventCause::DeadlineHit => d <= event.deadline_used,
            EventCause::TriggerFired => d <= tau,
        };
        let (reward, next) = if observed {
            let t = event.t_start + d;
            let x =
                if t >= event.t_end { event.state_end_pre_jump.clone() } else { event.samples.interpolate(t).unwrap() };
            (d, bucket(&x))
        } else if event.cause == EventCause::TriggerFired {
            (tau, bucket(&event.state_end_pre_jump))
        } else {
            continue;
        };
        let rate = alpha.alpha(table.visits(s, a));
        table.q_update_single(s, a, reward, next, rate, gamma).unwrap();
    }
}

pub fn tables_bitwise_equal(a: &QTable, b: &QTable) -> bool {
    a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits()) && a.visit_counts() == b.visit_counts()
}

pub mod orbit {
    use std::f64::consts::PI;

    use etc_deadline::engine::{integrate_flow, FlowSpec};
    use etc_deadline::orbit::{impulse_policy, BodyParams, OrbitalField, SpacecraftState};
    use nalgebra::Vector3;

    pub const R: f64 = 0.162;

    pub fn two_body(max_step: f64, rel_tol: f64, abs_tol: f64) -> FlowSpec<OrbitalField> {
        FlowSpec::new(OrbitalField { body: BodyParams::default(), disturbance: false }, max_step, rel_tol, abs_tol)
            .unwrap()
    }

    /// Relative energy and angular-momentum drift over one period for a few
    /// inclined, eccentric orbits, with the default integrator settings.
    pub fn conservation_drift() -> Vec<(f64, f64)> {
        let body = BodyParams::default();
        let flow = two_body(60.0, 1e-10, 1e-14);
        [(1.7 * R, 1.05), (2.0 * R, 1.0), (2.3 * R, 0.93)]
            .iter()
            .map(|&(r, speed_factor)| {
                let v = speed_factor * body.circular_speed(r);
                let x0 = [r, 0.0, 0.0, 0.0, v * 0.8, v * 0.6];
                let s0 = SpacecraftState::from_slice(&x0, 0.0);
                let a = 1.0 / (2.0 / r - v * v / body.mu);
                let period = 2.0 * PI * (a.powi(3) / body.mu).sqrt();
                let traj = integrate_flow(&flow, &x0, 0.0, period).unwrap();
                let s1 = SpacecraftState::from_slice(traj.last_state().unwrap(), period);
                let e0 = s0.specific_energy(body.mu);
                let h0 = s0.angular_momentum();
                (((s1.specific_energy(body.mu) - e0) / e0).abs(), (s1.angular_momentum() - h0).norm() / h0.norm())
            })
            .collect()
    }

    /// Position errors on a quarter circular orbit with the step cap set to
    /// quarter/n for each n, loose tolerances so the cap alone sets the step.
    /// Returns `(n, steps taken, relative error)`.
    pub fn capped_step_errors(ns: &[usize]) -> Vec<(usize, usize, f64)> {
        let body = BodyParams::default();
        let r = 2.0 * R;
        let v = body.circular_speed(r);
        let quarter = body.orbital_period(r) / 4.0;
        let exact = [0.0, r, 0.0];
        ns.iter()
            .map(|&n| {
                let flow = two_body(quarter / n as f64, 1e3, 1e3);
                let traj = integrate_flow(&flow, &[r, 0.0, 0.0, 0.0, v, 0.0], 0.0, quarter).unwrap();
                let x = traj.last_state().unwrap();
                let err = (0..3).map(|i| (x[i] - exact[i]).powi(2)).sum::<f64>().sqrt() / r;
                (n, traj.len() - 1, err)
            })
            .collect()
    }

    pub fn observed_orders(errors: &[(usize, usize, f64)]) -> Vec<f64> {
        errors.windows(2).map(|w| (w[0].2 / w[1].2).log2()).collect()
    }

    /// Residuals of the injection conic at `s`: eccentricity, relative radius
    /// residual of `p/(1+e cos ν)`, relative residual of `‖r×v⁺‖ = √(μp)`.
    pub fn injection_residuals(s: &SpacecraftState, body: &BodyParams) -> Result<(f64, f64, f64), String> {
        let (_, inj) = impulse_policy(s, body).map_err(|e| e.to_string())?;
        let r = s.radius();
        let on_conic = inj.semi_latus_rectum / (1.0 + inj.eccentricity * inj.true_anomaly.cos());
        let h = s.position.cross(&inj.new_velocity).norm();
        let h_conic = (body.mu * inj.semi_latus_rectum).sqrt();
        Ok((inj.eccentricity, ((on_conic - r) / r).abs(), ((h - h_conic) / h_conic).abs()))
    }

    /// 50 radii spanning the closed safe band, with three velocity directions each.
    pub fn band_sweep_states() -> Vec<SpacecraftState> {
        let body = BodyParams::default();
        let mut out = Vec::new();
        for k in 0..50 {
            let r = R * (1.6 + 0.8 * k as f64 / 49.0);
            let vc = body.circular_speed(r);
            let pos = Vector3::new(0.6 * r, -0.8 * r, 0.0);
            for vel in [
                Vector3::new(0.8 * vc, 0.6 * vc, 0.0),
                Vector3::new(0.1 * vc, 0.3 * vc, 0.9 * vc),
                Vector3::new(-0.5 * vc, 0.2 * vc, -0.7 * vc),
            ] {
                out.push(SpacecraftState::new(pos, vel, 0.0));
            }
        }
        out
    }
}
