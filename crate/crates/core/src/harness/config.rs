use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::learning::{DeadlineGrid, RadiusGrid, TrainConfig};
use crate::orbit::{BodyParams, IntegratorConfig, OrbitPlant, TriggerConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantConfig {
    /// Include the rotating degree-2 gravity field.
    pub disturbance: bool,
    /// Radii of random initial states, multiples of R.
    pub initial_band: (f64, f64),
    /// Relative spread of the initial tangential speed.
    pub speed_spread: f64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        Self { disturbance: true, initial_band: (1.7, 2.3), speed_spread: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub radius_buckets: usize,
    /// Bucketed radii, multiples of R.
    pub radius_band: (f64, f64),
    pub deadline_actions: usize,
    /// Seconds.
    pub delta_min: f64,
    /// Seconds.
    pub delta_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            radius_buckets: 400,
            radius_band: (1.6, 2.4),
            deadline_actions: 10_000,
            delta_min: 50.0,
            delta_max: 360_000.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub n_trajectories: usize,
    pub events_per_trajectory: usize,
    /// Start every trajectory at this multiple of R instead of sampling.
    pub fixed_initial_radius: Option<f64>,
    /// Near-boundary radius used by `compare`, multiple of R.
    pub compare_radius: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { n_trajectories: 100, events_per_trajectory: 50, fixed_initial_radius: None, compare_radius: 2.3 }
    }
}

/// One experiment: every parameter has a key and a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub body: BodyParams,
    pub trigger: TriggerConfig,
    pub plant: PlantConfig,
    pub integrator: IntegratorConfig,
    pub grids: GridConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            body: BodyParams::default(),
            trigger: TriggerConfig::default(),
            plant: PlantConfig::default(),
            integrator: IntegratorConfig::default(),
            grids: GridConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            output_dir: PathBuf::from("output"),
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })?;
        toml::from_str::<Self>(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {}", path.display(), e.message())))
            .and_then(|cfg| cfg.validate().map(|_| cfg))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.body.validate().map_err(HarnessError::Config)?;
        self.trigger.validate().map_err(HarnessError::Config)?;
        let i = &self.integrator;
        if !(i.max_step > 0.0 && i.max_step.is_finite()) {
            return Err(HarnessError::Config(format!("integrator.max_step must be positive, got {}", i.max_step)));
        }
        if !(i.rel_tol > 0.0 && i.abs_tol > 0.0) {
            return Err(HarnessError::Config("integrator.rel_tol and integrator.abs_tol must be positive".into()));
        }
        let (lo, hi) = self.plant.initial_band;
        let (blo, bhi) = self.trigger.safe_band;
        if !(lo > blo && lo <= hi && hi < bhi) {
            return Err(HarnessError::Config(format!(
                "plant.initial_band must lie strictly inside trigger.safe_band, got ({lo}, {hi})"
            )));
        }
        if !(0.0..1.0).contains(&self.plant.speed_spread) {
            return Err(HarnessError::Config(format!(
                "plant.speed_spread must lie in [0, 1), got {}",
                self.plant.speed_spread
            )));
        }
        self.radius_grid().map_err(|e| HarnessError::Config(format!("grids: {e}")))?;
        self.deadline_grid().map_err(|e| HarnessError::Config(format!("grids: {e}")))?;
        self.train.validate()?;
        if self.eval.n_trajectories == 0 {
            return Err(HarnessError::Config("eval.n_trajectories must be positive".into()));
        }
        if self.eval.events_per_trajectory == 0 {
            return Err(HarnessError::Config("eval.events_per_trajectory must be positive".into()));
        }
        for (key, m) in [
            ("eval.fixed_initial_radius", self.eval.fixed_initial_radius),
            ("eval.compare_radius", Some(self.eval.compare_radius)),
        ] {
            if let Some(m) = m {
                if !(m > blo && m < bhi) {
                    return Err(HarnessError::Config(format!("{key} must lie inside trigger.safe_band, got {m}")));
                }
            }
        }
        Ok(())
    }

    pub fn radius_grid(&self) -> Result<RadiusGrid, crate::learning::LearningError> {
        let r = self.body.mean_radius;
        let (lo, hi) = self.grids.radius_band;
        RadiusGrid::new(self.grids.radius_buckets, lo * r, hi * r)
    }

    pub fn deadline_grid(&self) -> Result<DeadlineGrid, crate::learning::LearningError> {
        DeadlineGrid::new(self.grids.deadline_actions, self.grids.delta_min, self.grids.delta_max)
    }

    pub fn build_plant(&self) -> Result<OrbitPlant, HarnessError> {
        let mut plant = OrbitPlant::new(self.body, self.trigger, self.plant.disturbance, self.integrator)
            .map_err(HarnessError::Config)?;
        plant.initial_band = self.plant.initial_band;
        plant.speed_spread = self.plant.speed_spread;
        Ok(plant)
    }

    /// Identity of a training run, ignoring its length and output location.
    pub fn training_fingerprint(&self) -> String {
        let mut c = self.clone();
        c.train.generations = 0;
        c.output_dir = PathBuf::new();
        c.eval = EvalConfig::default();
        serde_json::to_string(&c).expect("configuration serializes")
    }
}
