//! Multi-action update: one observed event yields updates for every grid
//! deadline whose outcome the event already reveals.

use super::{AlphaSchedule, DeadlineGrid, LearningError, QTable};
use crate::engine::{EventCause, EventRecord};

/// Updates extracted from one event, in ascending deadline order.
///
/// Actions `0..prefix_end` receive their own deadline as reward; their
/// successor buckets are stored as runs `(end_action_exclusive, bucket)`.
/// Actions `tail_start..n_actions`, if any, receive `tail_reward`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarvestPlan {
    pub state: usize,
    pub prefix_runs: Vec<(u32, u32)>,
    pub tail: Option<TailUpdate>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailUpdate {
    pub first_action: usize,
    pub reward_seconds: f64,
    pub next_state: usize,
}

impl HarvestPlan {
    pub fn prefix_len(&self) -> usize {
        self.prefix_runs.last().map_or(0, |&(end, _)| end as usize)
    }

    /// Every planned `(action, reward_seconds, next_state)` in application order.
    pub fn updates<'a>(&'a self, deadlines: &'a DeadlineGrid) -> impl Iterator<Item = (usize, f64, usize)> + 'a {
        let mut start = 0usize;
        let prefix = self.prefix_runs.iter().flat_map(move |&(end, next)| {
            let range = start..end as usize;
            start = end as usize;
            range.map(move |a| (a, deadlines.entries()[a], next as usize))
        });
        let tail = self.tail.into_iter().flat_map(move |t| {
            (t.first_action..deadlines.n_actions()).map(move |a| (a, t.reward_seconds, t.next_state))
        });
        prefix.chain(tail)
    }
}

/// Builds the update list for `event`, with `bucket` mapping a state to its row.
pub fn plan_harvest(
    event: &EventRecord,
    deadlines: &DeadlineGrid,
    bucket: impl Fn(&[f64]) -> usize,
    tolerance: f64,
) -> Result<HarvestPlan, LearningError> {
    let state = bucket(&event.state_start);
    let tau = event.duration();
    let horizon = match event.cause {
        EventCause::DeadlineHit => event.deadline_used,
        EventCause::TriggerFired => tau,
    };
    let prefix_end = deadlines.count_at_most(horizon);

    let samples = &event.samples;
    let mut x = vec![0.0; samples.dimension()];
    let mut runs: Vec<(u32, u32)> = Vec::new();
    for (a, &d) in deadlines.entries()[..prefix_end].iter().enumerate() {
        let t = event.t_start + d;
        let next = if t >= event.t_end {
            if t - event.t_end > tolerance {
                return Err(LearningError::Interpolation { time: t, start: event.t_start, end: event.t_end });
            }
            bucket(&event.state_end_pre_jump)
        } else {
            samples.interpolate_into(t, &mut x).ok_or(LearningError::Interpolation {
                time: t,
                start: event.t_start,
                end: event.t_end,
            })?;
            bucket(&x)
        } as u32;
        match runs.last_mut() {
            Some((end, b)) if *b == next => *end = a as u32 + 1,
            _ => runs.push((a as u32 + 1, next)),
        }
    }

    let tail = match event.cause {
        EventCause::TriggerFired if prefix_end < deadlines.n_actions() => Some(TailUpdate {
            first_action: prefix_end,
            reward_seconds: tau,
            next_state: bucket(&event.state_end_pre_jump),
        }),
        _ => None,
    };
    Ok(HarvestPlan { state, prefix_runs: runs, tail })
}

/// Applies a plan through single updates; returns the sum of learning rates used.
pub fn apply_plan(
    table: &mut QTable,
    plan: &HarvestPlan,
    deadlines: &DeadlineGrid,
    alpha: &AlphaSchedule,
    gamma: f64,
) -> Result<(f64, usize), LearningError> {
    let mut alpha_sum = 0.0;
    let mut count = 0;
    for (a, reward, next) in plan.updates(deadlines) {
        let rate = alpha.alpha(table.visits(plan.state, a));
        table.q_update_single(plan.state, a, reward, next, rate, gamma)?;
        alpha_sum += rate;
        count += 1;
    }
    Ok((alpha_sum, count))
}

/// Plans and applies the updates revealed by one event.
pub fn harvest_event(
    table: &mut QTable,
    event: &EventRecord,
    deadlines: &DeadlineGrid,
    bucket: impl Fn(&[f64]) -> usize,
    alpha: &AlphaSchedule,
    gamma: f64,
    tolerance: f64,
) -> Result<(), LearningError> {
    let plan = plan_harvest(event, deadlines, bucket, tolerance)?;
    apply_plan(table, &plan, deadlines, alpha, gamma).map(|_| ())
}
