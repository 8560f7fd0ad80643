//! Inter-event time statistics, reported in hours.

use super::event::EpisodeLog;
use super::EngineError;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

/// Per-event durations `t_{i+1} − t_i` in seconds.
pub fn tau_sequence(log: &EpisodeLog) -> Vec<f64> {
    log.events.iter().map(|e| e.duration()).collect()
}

fn check_taus(taus: &[f64]) -> Result<(), EngineError> {
    match taus.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        Some(bad) => {
            Err(EngineError::Parameter(format!("inter-event times must be finite and non-negative, got {bad}")))
        }
        None => Ok(()),
    }
}

/// Discounted inter-event time `Σ γ^i τ_i`, in hours.
pub fn diet(taus: &[f64], gamma: f64) -> Result<f64, EngineError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(EngineError::Parameter(format!("discount factor must lie in (0, 1), got {gamma}")));
    }
    check_taus(taus)?;
    let mut weight = 1.0;
    let mut total = 0.0;
    for tau in taus {
        total += weight * tau;
        weight *= gamma;
    }
    Ok(total / SECONDS_PER_HOUR)
}

/// Average inter-event time, in hours.
pub fn aiet(taus: &[f64]) -> Result<f64, EngineError> {
    if taus.is_empty() {
        return Err(EngineError::Parameter("average inter-event time of an empty sequence".into()));
    }
    check_taus(taus)?;
    Ok(taus.iter().sum::<f64>() / taus.len() as f64 / SECONDS_PER_HOUR)
}

/// Minimum inter-event time, in hours.
pub fn miet(taus: &[f64]) -> Result<f64, EngineError> {
    if taus.is_empty() {
        return Err(EngineError::Parameter("minimum inter-event time of an empty sequence".into()));
    }
    check_taus(taus)?;
    Ok(taus.iter().copied().fold(f64::INFINITY, f64::min) / SECONDS_PER_HOUR)
}
