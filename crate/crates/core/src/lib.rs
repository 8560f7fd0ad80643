//! Two-layer event-triggered control.
//!
//! The safety layer integrates an impulsive system and fires events when an
//! objective-based trigger crosses zero or a deadline expires. The optimization
//! layer learns, by tabular Q-learning, which deadline to impose after each
//! event so that the discounted sum of inter-event times is maximized.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engine;
pub mod harness;
pub mod learning;
pub mod orbit;
pub mod synthetic;
