use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{DeadlineGrid, LearningError};
use crate::engine::SECONDS_PER_HOUR;

/// Learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSchedule {
    Constant(f64),
    /// `α = (1 + visits)^−0.7`, counting visits before the update.
    VisitDecay,
}

impl AlphaSchedule {
    pub fn alpha(&self, visits: u64) -> f64 {
        match *self {
            AlphaSchedule::Constant(a) => a,
            AlphaSchedule::VisitDecay => (1.0 + visits as f64).powf(-0.7),
        }
    }

    pub fn validate(&self) -> Result<(), LearningError> {
        match *self {
            AlphaSchedule::Constant(a) if !(a > 0.0 && a <= 1.0) => {
                Err(LearningError::Config(format!("train.alpha_schedule constant must lie in (0, 1], got {a}")))
            }
            _ => Ok(()),
        }
    }
}

/// State-action values in discounted hours, with cached row maxima and visit counts.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    row_max: Vec<f64>,
    visits: Vec<u64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![0.0; n_states * n_actions],
            row_max: vec![0.0; n_states],
            visits: vec![0; n_states * n_actions],
        }
    }

    /// Builds a table from row-major values; visit counts start at zero.
    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>) -> Result<Self, LearningError> {
        if n_states == 0 || n_actions == 0 || values.len() != n_states * n_actions {
            return Err(LearningError::Config(format!(
                "table of {} values does not match {n_states} x {n_actions}",
                values.len()
            )));
        }
        let mut t =
            Self { n_states, n_actions, values, row_max: vec![0.0; n_states], visits: vec![0; n_states * n_actions] };
        for s in 0..n_states {
            t.row_max[s] = t.recompute_max(s);
        }
        Ok(t)
    }

    pub fn set_visits(&mut self, visits: Vec<u64>) -> Result<(), LearningError> {
        if visits.len() != self.visits.len() {
            return Err(LearningError::Config(format!(
                "visit table of {} entries does not match {} x {}",
                visits.len(),
                self.n_states,
                self.n_actions
            )));
        }
        self.visits = visits;
        Ok(())
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn visit_counts(&self) -> &[u64] {
        &self.visits
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.n_actions + a]
    }

    /// `V(s) = max_a Q(s, a)` from the cache.
    pub fn row_max(&self, s: usize) -> f64 {
        self.row_max[s]
    }

    fn recompute_max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn check(&self, s: usize, a: usize) -> Result<(), LearningError> {
        if s >= self.n_states {
            return Err(LearningError::Index { what: "state", index: s, len: self.n_states });
        }
        if a >= self.n_actions {
            return Err(LearningError::Index { what: "action", index: a, len: self.n_actions });
        }
        Ok(())
    }

    /// `Q(s,a) ← (1−α)Q(s,a) + α(R + γ·V(s'))` with the reward given in seconds.
    pub fn q_update_single(
        &mut self,
        s: usize,
        a: usize,
        reward_seconds: f64,
        s_next: usize,
        alpha: f64,
        gamma: f64,
    ) -> Result<(), LearningError> {
        self.check(s, a)?;
        if s_next >= self.n_states {
            return Err(LearningError::Index { what: "state", index: s_next, len: self.n_states });
        }
        let target = reward_seconds / SECONDS_PER_HOUR + gamma * self.row_max[s_next];
        let i = s * self.n_actions + a;
        let old = self.values[i];
        let new = (1.0 - alpha) * old + alpha * target;
        self.values[i] = new;
        self.visits[i] += 1;
        if new >= self.row_max[s] {
            self.row_max[s] = new;
        } else if old == self.row_max[s] {
            self.row_max[s] = self.recompute_max(s);
        }
        Ok(())
    }

    /// Greedy action in `s`; ties go to the largest deadline.
    pub fn greedy_action(&self, s: usize) -> usize {
        let row = self.row(s);
        let best = self.row_max[s];
        row.iter().rposition(|&q| q == best).unwrap_or(self.n_actions - 1)
    }
}

/// ε-greedy choice: uniform over the grid with probability `epsilon`.
pub fn select_action<R: Rng + ?Sized>(table: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..table.n_actions())
    } else {
        table.greedy_action(s)
    }
}

/// Learned deadline per bucket, seconds.
pub fn greedy_policy(table: &QTable, deadlines: &DeadlineGrid) -> Vec<f64> {
    (0..table.n_states()).map(|s| deadlines.entries()[table.greedy_action(s)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const H: f64 = SECONDS_PER_HOUR;

    #[test]
    fn single_update_example() {
        let mut t = QTable::from_values(2, 2, vec![0.0, 0.0, 20.0, 5.0]).unwrap();
        t.q_update_single(0, 0, 10.0 * H, 1, 0.5, 0.9).unwrap();
        assert_relative_eq!(t.value(0, 0), 14.0, max_relative = 1e-15);
        assert_eq!(t.row_max(0), 14.0);
        assert_eq!(t.visits(0, 0), 1);
    }

    #[test]
    fn zero_rate_is_identity() {
        let mut t = QTable::from_values(1, 2, vec![3.0, 1.0]).unwrap();
        t.q_update_single(0, 1, 99.0 * H, 0, 0.0, 0.9).unwrap();
        assert_eq!(t.values(), &[3.0, 1.0]);
    }

    #[test]
    fn repeated_updates_reach_fixed_point() {
        let mut t = QTable::from_values(2, 1, vec![0.0, 20.0]).unwrap();
        for _ in 0..2000 {
            t.q_update_single(0, 0, 10.0 * H, 1, 0.1, 0.9).unwrap();
        }
        assert_relative_eq!(t.value(0, 0), 28.0, max_relative = 1e-12);
    }

    #[test]
    fn cache_tracks_decreasing_maximum() {
        let mut t = QTable::from_values(1, 3, vec![5.0, 4.0, 1.0]).unwrap();
        t.q_update_single(0, 0, 0.0, 0, 1.0, 0.0).unwrap();
        assert_eq!(t.row_max(0), 4.0);
    }

    #[test]
    fn range_checks() {
        let mut t = QTable::new(2, 2);
        assert!(t.q_update_single(2, 0, 1.0, 0, 0.5, 0.9).is_err());
        assert!(t.q_update_single(0, 2, 1.0, 0, 0.5, 0.9).is_err());
        assert!(t.q_update_single(0, 0, 1.0, 5, 0.5, 0.9).is_err());
        assert!(QTable::from_values(2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn alpha_schedules() {
        assert_eq!(AlphaSchedule::VisitDecay.alpha(0), 1.0);
        assert_relative_eq!(AlphaSchedule::VisitDecay.alpha(9), 10f64.powf(-0.7));
        assert_eq!(AlphaSchedule::Constant(0.1).alpha(1000), 0.1);
        assert!(AlphaSchedule::Constant(0.0).validate().is_err());
        assert!(AlphaSchedule::Constant(1.5).validate().is_err());
        assert!(AlphaSchedule::VisitDecay.validate().is_ok());
    }

    #[test]
    fn greedy_choices() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let t = QTable::from_values(2, 4, vec![0.0, 3.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(select_action(&t, 0, 0.0, &mut rng), 1);
        assert_eq!(select_action(&t, 1, 0.0, &mut rng), 3);
        let grid = DeadlineGrid::new(4, 1.0, 8.0).unwrap();
        assert_eq!(greedy_policy(&t, &grid), vec![2.0, 8.0]);
        let zeros = QTable::new(3, 4);
        assert_eq!(greedy_policy(&zeros, &grid), vec![8.0; 3]);
    }

    #[test]
    fn uniform_exploration() {
        let n = 10;
        let t = QTable::from_values(1, n, (0..n).map(|i| i as f64).collect()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut counts = vec![0usize; n];
        for _ in 0..draws {
            counts[select_action(&t, 0, 1.0, &mut rng)] += 1;
        }
        let expected = draws as f64 / n as f64;
        let sigma = (expected * (1.0 - 1.0 / n as f64)).sqrt();
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        for &c in &counts {
            assert!((c as f64 - expected).abs() < 3.0 * sigma, "{counts:?}");
        }
        // 99.9% quantile of chi-square with 9 degrees of freedom.
        assert!(chi2 < 27.88, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn cache_stays_coherent(ops in prop::collection::vec((0usize..3, 0usize..5, 0.0f64..5e4, 0usize..3, 0.01f64..1.0), 1..200)) {
            let mut t = QTable::new(3, 5);
            for (s, a, r, sn, alpha) in ops {
                t.q_update_single(s, a, r, sn, alpha, 0.9).unwrap();
                for row in 0..3 {
                    let direct = t.row(row).iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    prop_assert_eq!(t.row_max(row), direct);
                }
            }
        }

        #[test]
        fn values_stay_bounded(ops in prop::collection::vec((0usize..3, 0usize..4, 0.0f64..1.0, 0usize..3, 0.01f64..1.0), 1..300)) {
            let delta_max = 360_000.0;
            let gamma = 0.9;
            let bound = delta_max / H / (1.0 - gamma);
            let mut t = QTable::new(3, 4);
            for (s, a, u, sn, alpha) in ops {
                t.q_update_single(s, a, u * delta_max, sn, alpha, gamma).unwrap();
            }
            prop_assert!(t.values().iter().all(|&q| (0.0..=bound * (1.0 + 1e-12)).contains(&q)));
        }

        #[test]
        fn scaling_preserves_greedy(values in prop::collection::vec(0.0f64..100.0, 12), k in 0.01f64..100.0) {
            let a = QTable::from_values(3, 4, values.clone()).unwrap();
            let b = QTable::from_values(3, 4, values.iter().map(|v| v * k).collect()).unwrap();
            let grid = DeadlineGrid::new(4, 1.0, 8.0).unwrap();
            let pa = greedy_policy(&a, &grid);
            // Scaling can only merge near-ties through rounding; exact ties and strict orders survive.
            for (s, &chosen) in pa.iter().enumerate() {
                let row = a.row(s);
                let best = a.greedy_action(s);
                let unique_margin = row.iter().enumerate().filter(|&(i, _)| i != best).all(|(_, &q)| row[best] - q > 1e-9 * row[best]);
                if unique_margin {
                    prop_assert_eq!(chosen, greedy_policy(&b, &grid)[s]);
                }
                prop_assert!(grid.entries().contains(&chosen));
            }
        }
    }
}
