//! Dormand–Prince 5(4) integration of the continuous flow between events.
//!
//! Every accepted step is capped at `max_step` and retained as a dense sample,
//! which is what the event locator and the multi-action Q update consume.

use super::EngineError;

/// Right-hand side of `ẋ = f(x) + d`, possibly time varying.
pub trait VectorField {
    fn dimension(&self) -> usize;

    /// Writes the derivative of `x` at time `t` into `dx`.
    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]);
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (**self).eval(t, x, dx)
    }
}

/// A vector field defined by a closure over `(t, x, dx)`.
pub struct FnField<F> {
    dimension: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnField<F> {
    pub fn new(dimension: usize, f: F) -> Self {
        Self { dimension, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> VectorField for FnField<F> {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (self.f)(t, x, dx)
    }
}

/// Flow of the impulsive system together with its integration settings.
#[derive(Debug, Clone)]
pub struct FlowSpec<F> {
    pub field: F,
    /// Upper bound on every accepted step, seconds.
    pub max_step: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl<F: VectorField> FlowSpec<F> {
    pub fn new(field: F, max_step: f64, rel_tol: f64, abs_tol: f64) -> Result<Self, EngineError> {
        if !(max_step > 0.0 && max_step.is_finite()) {
            return Err(EngineError::Parameter(format!("max_step must be positive, got {max_step}")));
        }
        if !(rel_tol > 0.0 && abs_tol > 0.0) {
            return Err(EngineError::Parameter(format!(
                "tolerances must be positive, got rel_tol={rel_tol} abs_tol={abs_tol}"
            )));
        }
        Ok(Self { field, max_step, rel_tol, abs_tol })
    }

    pub fn dimension(&self) -> usize {
        self.field.dimension()
    }
}

/// Time-ordered samples of a trajectory, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dimension: usize,
    times: Vec<f64>,
    states: Vec<f64>,
}

impl Trajectory {
    pub fn new(dimension: usize) -> Self {
        Self { dimension, times: Vec::new(), states: Vec::new() }
    }

    pub fn with_capacity(dimension: usize, samples: usize) -> Self {
        Self { dimension, times: Vec::with_capacity(samples), states: Vec::with_capacity(samples * dimension) }
    }

    pub fn push(&mut self, t: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dimension);
        debug_assert!(self.times.last().is_none_or(|&last| t > last));
        self.times.push(t);
        self.states.extend_from_slice(x);
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn time(&self, i: usize) -> f64 {
        self.times[i]
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn first_time(&self) -> Option<f64> {
        self.times.first().copied()
    }

    pub fn last_time(&self) -> Option<f64> {
        self.times.last().copied()
    }

    pub fn last_state(&self) -> Option<&[f64]> {
        (!self.is_empty()).then(|| self.state(self.len() - 1))
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &[f64])> + '_ {
        self.times.iter().copied().zip(self.states.chunks_exact(self.dimension))
    }

    /// Linear interpolation of the state at `t`, written into `out`.
    ///
    /// Returns `None` when `t` lies outside the sampled span.
    pub fn interpolate_into(&self, t: f64, out: &mut [f64]) -> Option<()> {
        let (first, last) = (self.first_time()?, self.last_time()?);
        if t < first || t > last {
            return None;
        }
        let hi = self.times.partition_point(|&s| s < t);
        if self.times[hi] == t {
            out.copy_from_slice(self.state(hi));
            return Some(());
        }
        let lo = hi - 1;
        let (t0, t1) = (self.times[lo], self.times[hi]);
        let w = (t - t0) / (t1 - t0);
        for ((o, a), b) in out.iter_mut().zip(self.state(lo)).zip(self.state(hi)) {
            *o = a + w * (b - a);
        }
        Some(())
    }

    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.dimension];
        self.interpolate_into(t, &mut out).map(|_| out)
    }
}

// Dormand–Prince 5(4) tableau. The last row of A is the 5th-order weight vector (FSAL).
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] =
    [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Adaptive stepper holding the current point of the integration.
pub struct Stepper<'a, F> {
    flow: &'a FlowSpec<F>,
    t: f64,
    y: Vec<f64>,
    h: f64,
    k: [Vec<f64>; 7],
    y_new: Vec<f64>,
    stage: Vec<f64>,
    fsal_valid: bool,
}

impl<'a, F: VectorField> Stepper<'a, F> {
    pub fn new(flow: &'a FlowSpec<F>, t0: f64, y0: &[f64]) -> Result<Self, EngineError> {
        let n = flow.dimension();
        if y0.len() != n {
            return Err(EngineError::Dimension { expected: n, found: y0.len() });
        }
        Ok(Self {
            flow,
            t: t0,
            y: y0.to_vec(),
            h: flow.max_step,
            k: std::array::from_fn(|_| vec![0.0; n]),
            y_new: vec![0.0; n],
            stage: vec![0.0; n],
            fsal_valid: false,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> &[f64] {
        &self.y
    }

    fn stages(&mut self, t: f64, h: f64) -> Result<(), EngineError> {
        let n = self.y.len();
        if !self.fsal_valid {
            self.flow.field.eval(t, &self.y, &mut self.k[0]);
            check_finite(&self.k[0], t)?;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[s][..s].iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.stage[i] = self.y[i] + h * acc;
            }
            let ts = t + C[s] * h;
            self.flow.field.eval(ts, &self.stage, &mut self.k[s]);
            check_finite(&self.k[s], ts)?;
        }
        // Stage 7 is evaluated at the 5th-order solution, which is y_new.
        self.y_new.copy_from_slice(&self.stage);
        Ok(())
    }

    fn error_norm(&self, h: f64) -> f64 {
        let n = self.y.len();
        let mut sum = 0.0;
        for i in 0..n {
            let mut err = 0.0;
            for (s, e) in E.iter().enumerate() {
                err += e * self.k[s][i];
            }
            err *= h;
            let scale = self.flow.abs_tol + self.flow.rel_tol * self.y[i].abs().max(self.y_new[i].abs());
            sum += (err / scale).powi(2);
        }
        (sum / n as f64).sqrt()
    }

    /// Takes one accepted step that does not pass `t_limit`.
    pub fn step_toward(&mut self, t_limit: f64) -> Result<(), EngineError> {
        let remaining = t_limit - self.t;
        if remaining <= 0.0 {
            return Ok(());
        }
        let mut h = self.h.min(self.flow.max_step);
        loop {
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            self.stages(self.t, step)?;
            let err = self.error_norm(step);
            if !err.is_finite() {
                return Err(EngineError::IntegrationFailure { time: self.t });
            }
            if err <= 1.0 {
                self.t = if clipped { t_limit } else { self.t + step };
                std::mem::swap(&mut self.y, &mut self.y_new);
                self.k.swap(0, 6);
                self.fsal_valid = true;
                let factor =
                    if err == 0.0 { MAX_FACTOR } else { (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR) };
                // A clipped step says nothing about how large the next may be.
                self.h = if clipped { h.max(step * factor) } else { step * factor }.min(self.flow.max_step);
                return Ok(());
            }
            self.fsal_valid = true;
            h = step * (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
            if h <= f64::EPSILON * self.t.abs().max(1.0) * 16.0 {
                return Err(EngineError::IntegrationFailure { time: self.t });
            }
        }
    }

    /// State after a single untested step of length `dt` from the current point.
    ///
    /// Used to evaluate the flow inside an already accepted step.
    pub fn probe(&mut self, dt: f64, out: &mut [f64]) -> Result<(), EngineError> {
        if dt == 0.0 {
            out.copy_from_slice(&self.y);
            return Ok(());
        }
        self.stages(self.t, dt)?;
        out.copy_from_slice(&self.y_new);
        // k[0] still holds f(t, y).
        self.fsal_valid = true;
        Ok(())
    }
}

fn check_finite(dx: &[f64], t: f64) -> Result<(), EngineError> {
    if dx.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(EngineError::IntegrationFailure { time: t })
    }
}

/// Integrates the flow from `(t0, x0)` to `t1`, returning every accepted step.
pub fn integrate_flow<F: VectorField>(
    flow: &FlowSpec<F>,
    x0: &[f64],
    t0: f64,
    t1: f64,
) -> Result<Trajectory, EngineError> {
    if !(t1 >= t0) {
        return Err(EngineError::Parameter(format!("t1 ({t1}) precedes t0 ({t0})")));
    }
    let mut stepper = Stepper::new(flow, t0, x0)?;
    let mut out = Trajectory::with_capacity(flow.dimension(), 16);
    out.push(t0, x0);
    while stepper.time() < t1 {
        stepper.step_toward(t1)?;
        out.push(stepper.time(), stepper.state());
    }
    Ok(out)
}
