use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::algorithms::PlannerConfig;
use crate::env::dchain::SimpleVariant;
use crate::error::{Error, Result};
use crate::oracle::DEFAULT_ENUMERATION_CAP;

/// Whether planners run one offline episode or plan-execute-replan cycles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    Offline,
    Online,
}

/// Environment descriptor: a kind plus its parameters, or a fixture file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    Dchain {
        depth: usize,
        #[serde(default = "default_branching")]
        branching: usize,
        #[serde(default = "default_two")]
        agents: usize,
        #[serde(default = "default_variant")]
        variant: SimpleVariant,
    },
    FrozenLake {
        /// Map file in the S/F/H/G text format; overrides generation.
        #[serde(default)]
        map_file: Option<PathBuf>,
        /// Inline map text in the same format.
        #[serde(default)]
        map: Option<String>,
        #[serde(default = "default_lake_width")]
        width: usize,
        #[serde(default = "default_lake_height")]
        height: usize,
        #[serde(default = "default_hole_probability")]
        hole_probability: f64,
        #[serde(default = "default_two")]
        goals: usize,
        #[serde(default = "default_two")]
        agents: usize,
        #[serde(default = "default_step_budget")]
        step_budget: u32,
        /// Number of generated maps; trial `i` runs on map `i mod instances`.
        #[serde(default = "default_one")]
        instances: usize,
        #[serde(default)]
        instance_seed: u64,
    },
    Coverage {
        /// JSON graph-coverage instance; overrides synthesis.
        #[serde(default)]
        instance_file: Option<PathBuf>,
        #[serde(default = "default_vertices")]
        vertices: usize,
        #[serde(default = "default_targets")]
        targets: usize,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "default_travel_budget")]
        budget: f64,
        #[serde(default = "default_three")]
        agents: usize,
        #[serde(default = "default_one")]
        instances: usize,
        #[serde(default)]
        instance_seed: u64,
    },
}

fn default_branching() -> usize {
    2
}
fn default_one() -> usize {
    1
}
fn default_two() -> usize {
    2
}
fn default_three() -> usize {
    3
}
fn default_variant() -> SimpleVariant {
    SimpleVariant::Standard
}
fn default_lake_width() -> usize {
    12
}
fn default_lake_height() -> usize {
    8
}
fn default_hole_probability() -> f64 {
    0.2
}
fn default_step_budget() -> u32 {
    100
}
fn default_vertices() -> usize {
    50
}
fn default_targets() -> usize {
    20
}
fn default_radius() -> f64 {
    0.05
}
fn default_travel_budget() -> f64 {
    2.5
}
fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP as u64
}

impl EnvironmentSpec {
    /// Resolves relative fixture paths against `base`.
    pub fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        match self {
            Self::FrozenLake { map_file, .. } => fix(map_file),
            Self::Coverage { instance_file, .. } => fix(instance_file),
            Self::Dchain { .. } => {}
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        spec.rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }
}

/// A batch of seeded trials over one environment and a list of planners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub env_id: String,
    pub environment: EnvironmentSpec,
    #[serde(default)]
    pub mode: Mode,
    pub planners: Vec<PlannerConfig>,
    /// Explicit seeds; when absent, `base_seed .. base_seed + trials`.
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Record every this many planning iterations; defaults to the budget.
    #[serde(default)]
    pub cadence: Option<usize>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Largest joint space the regret oracle may enumerate.
    #[serde(default = "default_cap")]
    pub oracle_cap: u64,
    /// Fail instead of falling back to a lower-bound reference when the
    /// oracle cannot enumerate the instance.
    #[serde(default)]
    pub require_exact_regret: bool,
}

impl ExperimentSpec {
    pub fn new(
        env_id: impl Into<String>,
        environment: EnvironmentSpec,
        planners: Vec<PlannerConfig>,
    ) -> Self {
        Self {
            env_id: env_id.into(),
            environment,
            mode: Mode::Offline,
            planners,
            seeds: None,
            base_seed: 0,
            trials: Some(1),
            cadence: None,
            output_dir: None,
            oracle_cap: DEFAULT_ENUMERATION_CAP as u64,
            require_exact_regret: false,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut spec = Self::from_toml(&std::fs::read_to_string(path)?)?;
        spec.environment
            .rebase(path.parent().unwrap_or(Path::new(".")));
        Ok(spec)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.planners.is_empty() {
            return Err(Error::InvalidConfig("experiment lists no planners".into()));
        }
        if self.seed_list().is_empty() {
            return Err(Error::InvalidConfig(
                "trial count must be at least 1".into(),
            ));
        }
        if self.cadence == Some(0) {
            return Err(Error::InvalidConfig("cadence must be at least 1".into()));
        }
        Ok(())
    }

    /// The seeds trials run under, in trial order.
    pub fn seed_list(&self) -> Vec<u64> {
        match &self.seeds {
            Some(s) => s.clone(),
            None => {
                let n = self.trials.unwrap_or(1) as u64;
                (0..n).map(|i| self.base_seed + i).collect()
            }
        }
    }

    /// Replaces the seed list with `count` consecutive seeds from `base_seed`.
    pub fn set_trial_count(&mut self, count: usize) {
        self.seeds = None;
        self.trials = Some(count);
    }
}
