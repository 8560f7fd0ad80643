//! Small plants with closed-form behaviour, used to check the engine and the
//! learner against analytic oracles.

use std::convert::Infallible;

use rand::{Rng, RngCore};

use crate::engine::{FlowSpec, Trigger, VectorField};
use crate::learning::{BoxError, DeadlineGrid, Environment, RadiusGrid};

/// `ẋ = (1, 0, …, 0)`: a clock in the first coordinate, everything else frozen.
#[derive(Debug, Clone, Copy)]
pub struct ClockField {
    pub dimension: usize,
}

impl VectorField for ClockField {
    fn dimension(&self) -> usize {
        self.dimension
    }

    fn eval(&self, _t: f64, _x: &[f64], dx: &mut [f64]) {
        dx.fill(0.0);
        dx[0] = 1.0;
    }
}

fn clock_flow(dimension: usize, max_step: f64) -> FlowSpec<ClockField> {
    FlowSpec::new(ClockField { dimension }, max_step, 1e-10, 1e-12).expect("valid clock flow")
}

/// Clock/level plant on `[c, z]` with a level-dependent trigger interval.
///
/// `Ξ = (c − c̄) − τ(z̄)` fires exactly `τ(z̄)` after the last event, where
/// `z̄` is the level at that event. The jump maps `z ↦ (1.7z + 0.3) mod 1`.
pub mod level {
    use super::*;

    /// `τ(z) = 5 + 10z`, seconds.
    pub fn interval(z: f64) -> f64 {
        5.0 + 10.0 * z
    }

    /// `τ'(z) = τ(z)/2 + 1 ≤ τ(z)`: the dominated trigger fires first.
    pub fn dominated_interval(z: f64) -> f64 {
        0.5 * interval(z) + 1.0
    }

    pub fn flow() -> FlowSpec<ClockField> {
        clock_flow(2, 0.7)
    }

    #[derive(Debug, Clone, Copy)]
    pub struct LevelTrigger {
        pub interval: fn(f64) -> f64,
    }

    impl Trigger for LevelTrigger {
        fn evaluate(&self, x: &[f64], x_last_event: &[f64]) -> f64 {
            (x[0] - x_last_event[0]) - (self.interval)(x_last_event[1])
        }
    }

    pub fn trigger() -> LevelTrigger {
        LevelTrigger { interval }
    }

    pub fn dominated_trigger() -> LevelTrigger {
        LevelTrigger { interval: dominated_interval }
    }

    pub fn jump(x: &[f64]) -> Result<Vec<f64>, Infallible> {
        Ok(vec![x[0], (1.7 * x[1] + 0.3).rem_euclid(1.0)])
    }
}

/// Deterministic three-state decision process built on a clock `p` (seconds).
///
/// The learner state is `floor(p / 1 h) mod 3`. The trigger fires a fixed
/// time after each event depending on the state at that event; the jump
/// recentres `p` in its hour so transitions are exactly repeatable.
#[derive(Debug, Clone)]
pub struct ThreeBucketMdp {
    flow: FlowSpec<ClockField>,
    trigger: BucketTrigger,
}

#[derive(Debug, Clone, Copy)]
pub struct BucketTrigger {
    pub intervals: [f64; 3],
}

const HOUR: f64 = 3600.0;

fn hour_bucket(p: f64) -> usize {
    ((p / HOUR).floor().rem_euclid(3.0)) as usize
}

impl Trigger for BucketTrigger {
    fn evaluate(&self, x: &[f64], x_last_event: &[f64]) -> f64 {
        (x[0] - x_last_event[0]) - self.intervals[hour_bucket(x_last_event[0])]
    }
}

impl ThreeBucketMdp {
    /// Trigger intervals per state, seconds; use a very large value for "never".
    pub fn new(intervals: [f64; 3]) -> Self {
        Self { flow: clock_flow(1, HOUR), trigger: BucketTrigger { intervals } }
    }

    /// Intervals 9500 s, 7000 s and effectively never; the optimal action differs per state.
    pub fn standard() -> Self {
        Self::new([9500.0, 7000.0, 360_000.0])
    }

    /// Actions {1 h, √3 h, 3 h}.
    pub fn deadlines() -> DeadlineGrid {
        DeadlineGrid::new(3, HOUR, 3.0 * HOUR).expect("valid grid")
    }

    pub fn states() -> RadiusGrid {
        RadiusGrid::new(3, 0.0, 3.0).expect("valid grid")
    }

    pub fn intervals(&self) -> [f64; 3] {
        self.trigger.intervals
    }
}

impl Environment for ThreeBucketMdp {
    type Field = ClockField;
    type Trig = BucketTrigger;

    fn flow(&self) -> &FlowSpec<ClockField> {
        &self.flow
    }

    fn trigger(&self) -> &BucketTrigger {
        &self.trigger
    }

    fn jump(&self, x: &[f64]) -> Result<Vec<f64>, BoxError> {
        Ok(vec![((x[0] / HOUR).floor() + 0.5) * HOUR])
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![(rng.random_range(0..3) as f64 + 0.5) * HOUR]
    }

    fn bucket_coordinate(&self, x: &[f64]) -> f64 {
        (x[0] / HOUR).rem_euclid(3.0)
    }
}

/// Clock plant whose trigger never fires (`Ξ ≡ −1`); every interval ends at its deadline.
#[derive(Debug, Clone)]
pub struct QuietPlant {
    flow: FlowSpec<ClockField>,
}

impl Default for QuietPlant {
    fn default() -> Self {
        Self { flow: clock_flow(1, 3600.0) }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NeverTrigger;

impl Trigger for NeverTrigger {
    fn evaluate(&self, _x: &[f64], _x_last_event: &[f64]) -> f64 {
        -1.0
    }
}

impl Environment for QuietPlant {
    type Field = ClockField;
    type Trig = NeverTrigger;

    fn flow(&self) -> &FlowSpec<ClockField> {
        &self.flow
    }

    fn trigger(&self) -> &NeverTrigger {
        &NeverTrigger
    }

    fn jump(&self, x: &[f64]) -> Result<Vec<f64>, BoxError> {
        Ok(x.to_vec())
    }

    fn sample_initial_state(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        vec![rng.random::<f64>()]
    }

    fn bucket_coordinate(&self, x: &[f64]) -> f64 {
        x[0]
    }
}
