//! Event location and episode iteration for the deadline-augmented trigger.
//!
//! The next event time is the earlier of the first zero crossing of the
//! trigger `Ξ(x(t), x(t_i))` and the deadline `t_i + δ_i`.

use super::integrator::{FlowSpec, Stepper, Trajectory, VectorField};
use super::EngineError;

/// Event location accuracy used unless a caller overrides it, seconds.
pub const DEFAULT_EVENT_TOLERANCE: f64 = 1e-3;

const POLISH_ITERATIONS: usize = 40;

/// Objective-based triggering condition. Negative values certify the control
/// objective; a non-negative value demands an event.
pub trait Trigger {
    fn evaluate(&self, x: &[f64], x_last_event: &[f64]) -> f64;
}

impl<F: Fn(&[f64], &[f64]) -> f64> Trigger for F {
    fn evaluate(&self, x: &[f64], x_last_event: &[f64]) -> f64 {
        self(x, x_last_event)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventCause {
    TriggerFired,
    DeadlineHit,
}

/// One inter-event interval `[t_start, t_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub t_start: f64,
    pub t_end: f64,
    pub state_start: Vec<f64>,
    pub state_end_pre_jump: Vec<f64>,
    /// Filled in by [`run_episode`] once the jump map has been applied.
    pub state_end_post_jump: Option<Vec<f64>>,
    pub cause: EventCause,
    pub deadline_used: f64,
    pub samples: Trajectory,
}

impl EventRecord {
    pub fn duration(&self) -> f64 {
        self.t_end - self.t_start
    }
}

/// Sequence of contiguous events produced by one closed-loop run.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub events: Vec<EventRecord>,
    pub initial_state: Vec<f64>,
    /// Smallest barrier value seen along the samples, if a barrier was recorded.
    pub min_barrier_value: f64,
}

impl EpisodeLog {
    /// Evaluates a plant-supplied barrier over every retained sample.
    pub fn record_barrier(&mut self, barrier: impl Fn(&[f64]) -> f64) {
        self.min_barrier_value =
            self.events.iter().flat_map(|e| e.samples.iter()).map(|(_, x)| barrier(x)).fold(f64::INFINITY, f64::min);
    }

    /// Drops the dense samples, keeping only event boundaries.
    pub fn strip_samples(&mut self) {
        for event in &mut self.events {
            let dim = event.samples.dimension();
            event.samples = Trajectory::new(dim);
        }
    }
}

/// Finds the next event from `(t_last, x_last)` under `deadline`.
///
/// Trigger crossings are bracketed on accepted integrator steps, bisected until
/// the bracket is no wider than `tolerance`, then refined with a safeguarded
/// false-position iteration. The returned end point always satisfies `Ξ ≥ 0`
/// for trigger events, and every earlier sample satisfies `Ξ < 0`.
pub fn detect_event<F: VectorField, T: Trigger + ?Sized>(
    flow: &FlowSpec<F>,
    trigger: &T,
    x_last: &[f64],
    t_last: f64,
    deadline: f64,
    tolerance: f64,
) -> Result<EventRecord, EngineError> {
    if !(deadline > 0.0 && deadline.is_finite()) {
        return Err(EngineError::Parameter(format!("deadline must be positive and finite, got {deadline}")));
    }
    if !(tolerance > 0.0) {
        return Err(EngineError::Parameter(format!("event tolerance must be positive, got {tolerance}")));
    }
    let xi0 = trigger.evaluate(x_last, x_last);
    if !(xi0 < 0.0) {
        return Err(EngineError::InvalidStart { value: xi0, time: t_last });
    }

    let dim = flow.dimension();
    let t_deadline = t_last + deadline;
    let mut stepper = Stepper::new(flow, t_last, x_last)?;
    let mut samples = Trajectory::with_capacity(dim, 64);
    samples.push(t_last, x_last);
    let mut prev = x_last.to_vec();
    let mut xi_prev = xi0;

    loop {
        let t_prev = stepper.time();
        stepper.step_toward(t_deadline)?;
        let xi = trigger.evaluate(stepper.state(), x_last);
        if xi >= 0.0 {
            let step = stepper.time() - t_prev;
            let crossing = locate_crossing(flow, trigger, x_last, t_prev, &prev, xi_prev, step, xi, tolerance)?;
            if let Some((t_lo, x_lo)) = crossing.lower {
                samples.push(t_lo, &x_lo);
            }
            samples.push(crossing.t, &crossing.x);
            return Ok(EventRecord {
                t_start: t_last,
                t_end: crossing.t,
                state_start: x_last.to_vec(),
                state_end_pre_jump: crossing.x,
                state_end_post_jump: None,
                cause: EventCause::TriggerFired,
                deadline_used: deadline,
                samples,
            });
        }
        samples.push(stepper.time(), stepper.state());
        if stepper.time() >= t_deadline {
            return Ok(EventRecord {
                t_start: t_last,
                t_end: t_deadline,
                state_start: x_last.to_vec(),
                state_end_pre_jump: stepper.state().to_vec(),
                state_end_post_jump: None,
                cause: EventCause::DeadlineHit,
                deadline_used: deadline,
                samples,
            });
        }
        prev.copy_from_slice(stepper.state());
        xi_prev = xi;
    }
}

struct Crossing {
    t: f64,
    x: Vec<f64>,
    lower: Option<(f64, Vec<f64>)>,
}

#[allow(clippy::too_many_arguments)]
fn locate_crossing<F: VectorField, T: Trigger + ?Sized>(
    flow: &FlowSpec<F>,
    trigger: &T,
    x_last: &[f64],
    t_base: f64,
    x_base: &[f64],
    xi_base: f64,
    step: f64,
    xi_step: f64,
    tolerance: f64,
) -> Result<Crossing, EngineError> {
    let mut probe = Stepper::new(flow, t_base, x_base)?;
    let mut buf = vec![0.0; x_base.len()];
    let mut eval = |dt: f64, buf: &mut Vec<f64>| -> Result<f64, EngineError> {
        probe.probe(dt, buf)?;
        Ok(trigger.evaluate(buf, x_last))
    };

    // Offsets from t_base; xi(lo) < 0 <= xi(hi) throughout.
    let (mut lo, mut xi_lo) = (0.0, xi_base);
    let (mut hi, mut xi_hi) = (step, xi_step);
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        let xi = eval(mid, &mut buf)?;
        if xi >= 0.0 {
            (hi, xi_hi) = (mid, xi);
        } else {
            (lo, xi_lo) = (mid, xi);
        }
    }

    // Illinois refinement inside the tolerance bracket.
    let floor = 1e-9 * t_base.abs().max(1.0);
    let mut side = 0i8;
    let (mut w_lo, mut w_hi) = (xi_lo, xi_hi);
    for _ in 0..POLISH_ITERATIONS {
        if hi - lo <= floor || xi_hi == 0.0 {
            break;
        }
        let mut t = lo - w_lo * (hi - lo) / (w_hi - w_lo);
        if !(t > lo && t < hi) {
            t = 0.5 * (lo + hi);
        }
        let xi = eval(t, &mut buf)?;
        if xi >= 0.0 {
            (hi, xi_hi, w_hi) = (t, xi, xi);
            if side == 1 {
                w_lo *= 0.5;
            }
            side = 1;
        } else {
            (lo, w_lo) = (t, xi);
            if side == -1 {
                w_hi *= 0.5;
            }
            side = -1;
        }
    }

    let mut x_hi = vec![0.0; x_base.len()];
    probe.probe(hi, &mut x_hi)?;
    let lower = if t_base + lo > t_base && lo < hi && t_base + lo < t_base + hi {
        let mut x_lo = vec![0.0; x_base.len()];
        probe.probe(lo, &mut x_lo)?;
        Some((t_base + lo, x_lo))
    } else {
        None
    };
    Ok(Crossing { t: t_base + hi, x: x_hi, lower })
}

/// Closed-loop run of `n_events` events with deadlines `δ_i = policy(x(t_i))`.
///
/// The jump map is applied to each pre-jump end state and the result seeds the
/// next interval.
#[allow(clippy::too_many_arguments)]
pub fn run_episode<F, T, J, P, E>(
    flow: &FlowSpec<F>,
    trigger: &T,
    mut jump: J,
    mut deadline_policy: P,
    x0: &[f64],
    t0: f64,
    n_events: usize,
    tolerance: f64,
) -> Result<EpisodeLog, EngineError>
where
    F: VectorField,
    T: Trigger + ?Sized,
    J: FnMut(&[f64]) -> Result<Vec<f64>, E>,
    P: FnMut(&[f64]) -> f64,
    E: Into<Box<dyn std::error::Error + Send + Sync>>,
{
    if n_events == 0 {
        return Err(EngineError::Parameter("an episode needs at least one event".into()));
    }
    let mut events = Vec::with_capacity(n_events);
    let mut x = x0.to_vec();
    let mut t = t0;
    for index in 0..n_events {
        let at = |source: EngineError| EngineError::AtEvent { index, source: Box::new(source) };
        let deadline = deadline_policy(&x);
        let mut event = detect_event(flow, trigger, &x, t, deadline, tolerance).map_err(at)?;
        let post = jump(&event.state_end_pre_jump).map_err(|e| at(EngineError::Jump(e.into())))?;
        if post.len() != x.len() {
            return Err(at(EngineError::Dimension { expected: x.len(), found: post.len() }));
        }
        t = event.t_end;
        x.clone_from(&post);
        event.state_end_post_jump = Some(post);
        events.push(event);
    }
    Ok(EpisodeLog { events, initial_state: x0.to_vec(), min_barrier_value: f64::INFINITY })
}
