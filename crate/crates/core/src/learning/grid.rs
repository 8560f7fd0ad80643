use serde::{Deserialize, Serialize};

use super::LearningError;

/// Uniform partition of a scalar coordinate (the orbital radius) into buckets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusGrid {
    n_buckets: usize,
    r_min: f64,
    r_max: f64,
}

impl RadiusGrid {
    pub fn new(n_buckets: usize, r_min: f64, r_max: f64) -> Result<Self, LearningError> {
        if n_buckets == 0 {
            return Err(LearningError::Config("radius grid needs at least one bucket".into()));
        }
        if !(r_min.is_finite() && r_max.is_finite() && r_min < r_max) {
            return Err(LearningError::Config(format!(
                "radius grid bounds must satisfy r_min < r_max, got [{r_min}, {r_max}]"
            )));
        }
        Ok(Self { n_buckets, r_min, r_max })
    }

    pub fn n_buckets(&self) -> usize {
        self.n_buckets
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.r_min, self.r_max)
    }

    /// `floor(n·(r − r_min)/(r_max − r_min))`, clamped to the grid.
    pub fn bucket_of(&self, r: f64) -> usize {
        let u = self.n_buckets as f64 * (r - self.r_min) / (self.r_max - self.r_min);
        if u.is_nan() || u <= 0.0 {
            0
        } else {
            (u.floor() as usize).min(self.n_buckets - 1)
        }
    }

    pub fn center(&self, bucket: usize) -> f64 {
        self.r_min + (bucket as f64 + 0.5) * (self.r_max - self.r_min) / self.n_buckets as f64
    }
}

/// Exponentially spaced deadline candidates, seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct DeadlineGrid {
    entries: Vec<f64>,
}

impl DeadlineGrid {
    pub fn new(n_actions: usize, delta_min: f64, delta_max: f64) -> Result<Self, LearningError> {
        if n_actions < 2 {
            return Err(LearningError::Config(format!("deadline grid needs at least two actions, got {n_actions}")));
        }
        if !(delta_min > 0.0 && delta_max.is_finite() && delta_min < delta_max) {
            return Err(LearningError::Config(format!(
                "deadline grid bounds must satisfy 0 < delta_min < delta_max, got [{delta_min}, {delta_max}]"
            )));
        }
        let ratio = delta_max / delta_min;
        let last = (n_actions - 1) as f64;
        let mut entries: Vec<f64> = (0..n_actions).map(|k| delta_min * ratio.powf(k as f64 / last)).collect();
        entries[0] = delta_min;
        entries[n_actions - 1] = delta_max;
        Ok(Self { entries })
    }

    /// Arbitrary strictly increasing positive candidates.
    pub fn from_entries(entries: Vec<f64>) -> Result<Self, LearningError> {
        if entries.is_empty()
            || !(entries[0] > 0.0)
            || entries.windows(2).any(|w| !(w[1] > w[0]))
            || !entries[entries.len() - 1].is_finite()
        {
            return Err(LearningError::Config(
                "deadline candidates must be positive, finite and strictly increasing".into(),
            ));
        }
        Ok(Self { entries })
    }

    pub fn n_actions(&self) -> usize {
        self.entries.len()
    }

    pub fn delta_min(&self) -> f64 {
        self.entries[0]
    }

    pub fn delta_max(&self) -> f64 {
        self.entries[self.entries.len() - 1]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn deadline_of(&self, k: usize) -> Result<f64, LearningError> {
        self.entries.get(k).copied().ok_or(LearningError::Index { what: "action", index: k, len: self.entries.len() })
    }

    /// Number of candidates not exceeding `t`.
    pub fn count_at_most(&self, t: f64) -> usize {
        self.entries.partition_point(|&d| d <= t)
    }
}
