use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search::{BoltzmannParams, ScheduleSpec, SelectionRule};

/// Planner family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// Boltzmann selection, entropy bonus, marginal-contribution rewards.
    #[serde(rename = "CB", alias = "CB-MCTS")]
    Cb,
    /// Discounted UCT selection inside the same decentralized scaffold.
    #[serde(rename = "DEC", alias = "Dec-MCTS")]
    Dec,
    /// CB with global-utility rewards.
    #[serde(rename = "GU", alias = "GU-MCTS")]
    Gu,
    /// CB without the entropy bonus.
    #[serde(rename = "NE", alias = "NE-MCTS")]
    Ne,
    /// CB with a fast-decaying temperature.
    #[serde(rename = "FA", alias = "FA-MCTS")]
    Fa,
    /// CB per agent with no communication.
    #[serde(rename = "INDEPENDENT", alias = "Independent")]
    Independent,
    /// One centralized tree over interleaved agent layers.
    #[serde(rename = "CARDENTS", alias = "CAR-DENTS")]
    CarDents,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::Cb,
        Variant::Dec,
        Variant::Gu,
        Variant::Ne,
        Variant::Fa,
        Variant::Independent,
        Variant::CarDents,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Variant::Cb => "CB-MCTS",
            Variant::Dec => "Dec-MCTS",
            Variant::Gu => "GU-MCTS",
            Variant::Ne => "NE-MCTS",
            Variant::Fa => "FA-MCTS",
            Variant::Independent => "Independent",
            Variant::CarDents => "CAR-DENTS",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.display_name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace(['-', '_'], "");
        Ok(match norm.as_str() {
            "CB" | "CBMCTS" => Variant::Cb,
            "DEC" | "DECMCTS" => Variant::Dec,
            "GU" | "GUMCTS" => Variant::Gu,
            "NE" | "NEMCTS" => Variant::Ne,
            "FA" | "FAMCTS" => Variant::Fa,
            "INDEPENDENT" => Variant::Independent,
            "CARDENTS" => Variant::CarDents,
            _ => return Err(Error::Parse(format!("unknown planner variant {s:?}"))),
        })
    }
}

/// User-facing planner configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub variant: Variant,
    /// Label for reports; defaults to the variant's display name.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub epsilon: f64,
    pub gamma: f64,
    pub alpha_init: f64,
    /// Entropy weight scale; follows `alpha_init` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_init: Option<f64>,
    pub communication_period: usize,
    /// Iterations between plan exchanges; defaults to the communication period.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_iterations: Option<usize>,
    pub compression_size: usize,
    /// Iterations per agent (per replanning cycle in online mode).
    pub planning_budget: usize,
    pub plan_temperature: f64,
    pub sample_count: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Cb,
            name: None,
            epsilon: 0.5,
            gamma: 0.9,
            alpha_init: 1.0,
            beta_init: None,
            communication_period: 10,
            inner_iterations: None,
            compression_size: 10,
            planning_budget: 10_000,
            plan_temperature: 0.1,
            sample_count: 10,
        }
    }
}

impl PlannerConfig {
    pub fn new(variant: Variant) -> Self {
        Self {
            variant,
            ..Self::default()
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.variant.display_name().to_string())
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.planning_budget = budget;
        self
    }

    /// Tuned Frozen Lake settings. Ablations share the CB row.
    pub fn frozen_lake_preset(variant: Variant) -> Self {
        let mut c = Self::new(variant);
        match variant {
            Variant::Dec => {
                c.epsilon = 100.0;
                c.gamma = 0.99;
            }
            Variant::CarDents => {
                c.epsilon = 0.5;
                c.alpha_init = 1.0;
            }
            _ => {
                c.epsilon = 0.5;
                c.gamma = 0.9;
                c.alpha_init = 1.0;
            }
        }
        c
    }

    /// Tuned graph-coverage settings. Ablations share the CB row.
    pub fn coverage_preset(variant: Variant) -> Self {
        let mut c = Self::new(variant);
        match variant {
            Variant::Dec => {
                c.epsilon = 100.0;
                c.gamma = 0.6;
            }
            Variant::CarDents => {
                c.epsilon = 0.5;
                c.alpha_init = 10.0;
            }
            _ => {
                c.epsilon = 0.5;
                c.gamma = 0.8;
                c.alpha_init = 0.01;
            }
        }
        c
    }

    /// Sets a numeric field by its configuration key.
    pub fn set_param(&mut self, key: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::InvalidConfig(format!(
                    "{key} must be a non-negative integer, got {v}"
                )))
            }
        };
        match key {
            "epsilon" => self.epsilon = value,
            "gamma" => self.gamma = value,
            "alpha_init" => self.alpha_init = value,
            "beta_init" => self.beta_init = Some(value),
            "communication_period" => self.communication_period = as_count(value)?,
            "inner_iterations" => self.inner_iterations = Some(as_count(value)?),
            "compression_size" => self.compression_size = as_count(value)?,
            "planning_budget" => self.planning_budget = as_count(value)?,
            "plan_temperature" => self.plan_temperature = value,
            "sample_count" => self.sample_count = as_count(value)?,
            other => {
                return Err(Error::InvalidConfig(format!(
                    "unknown planner parameter {other:?}"
                )))
            }
        }
        Ok(())
    }
}

/// How the rollout payoff fed to backpropagation is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RewardMode {
    /// `g(own, others) - g(others)`
    Marginal,
    /// `g(own, others)`
    Global,
    /// `g(own)` alone.
    Own,
}

/// A configuration with every variant override applied.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub variant: Variant,
    pub selection: SelectionRule,
    /// Entropy backup runs only for Boltzmann variants.
    pub track_entropy: bool,
    pub reward: RewardMode,
    pub communicate: bool,
    pub centralized: bool,
    pub gamma: f64,
    pub communication_period: usize,
    pub inner_iterations: usize,
    pub compression_size: usize,
    pub planning_budget: usize,
    pub plan_temperature: f64,
    pub sample_count: usize,
}

impl ResolvedConfig {
    pub fn boltzmann(&self) -> Option<&BoltzmannParams> {
        match &self.selection {
            SelectionRule::Boltzmann(p) => Some(p),
            SelectionRule::Duct { .. } => None,
        }
    }

    /// Plan temperature at a given exchange round.
    pub fn plan_temperature_at(&self, round: usize) -> f64 {
        self.plan_temperature / (std::f64::consts::E + round as f64).ln()
    }
}

/// Resolves schedules, reward mode and communication for the variant.
pub fn apply_variant_schedules(config: &PlannerConfig) -> Result<ResolvedConfig> {
    let invalid = |m: String| Err(Error::InvalidConfig(m));
    if config.epsilon.is_nan() || config.epsilon <= 0.0 {
        return invalid(format!("epsilon must be positive, got {}", config.epsilon));
    }
    if config.variant != Variant::CarDents && !(0.5..1.0).contains(&config.gamma) {
        return invalid(format!("gamma must lie in [0.5, 1), got {}", config.gamma));
    }
    if config.variant != Variant::Dec && (config.alpha_init.is_nan() || config.alpha_init <= 0.0) {
        return invalid(format!(
            "alpha_init must be positive, got {}",
            config.alpha_init
        ));
    }
    let beta_init = config.beta_init.unwrap_or(config.alpha_init);
    if beta_init.is_nan() || beta_init < 0.0 {
        return invalid(format!("beta_init must be non-negative, got {beta_init}"));
    }
    if config.communication_period == 0 || config.inner_iterations == Some(0) {
        return invalid("communication period and inner iterations must be positive".into());
    }
    if config.compression_size == 0 || config.planning_budget == 0 || config.sample_count == 0 {
        return invalid(
            "compression size, planning budget and sample count must be positive".into(),
        );
    }
    if config.plan_temperature.is_nan() || config.plan_temperature <= 0.0 {
        return invalid(format!(
            "plan temperature must be positive, got {}",
            config.plan_temperature
        ));
    }

    let inverse = |init| ScheduleSpec::inverse_log(init);
    let cb = BoltzmannParams {
        alpha: inverse(config.alpha_init),
        beta: inverse(beta_init),
        epsilon: config.epsilon,
    };
    let mut resolved = ResolvedConfig {
        variant: config.variant,
        selection: SelectionRule::Boltzmann(cb),
        track_entropy: true,
        reward: RewardMode::Marginal,
        communicate: true,
        centralized: false,
        gamma: config.gamma,
        communication_period: config.communication_period,
        inner_iterations: config
            .inner_iterations
            .unwrap_or(config.communication_period),
        compression_size: config.compression_size,
        planning_budget: config.planning_budget,
        plan_temperature: config.plan_temperature,
        sample_count: config.sample_count,
    };
    match config.variant {
        Variant::Cb => {}
        Variant::Dec => {
            resolved.selection = SelectionRule::Duct {
                epsilon: config.epsilon,
            };
            resolved.track_entropy = false;
        }
        Variant::Gu => resolved.reward = RewardMode::Global,
        Variant::Ne => {
            resolved.selection = SelectionRule::Boltzmann(BoltzmannParams {
                beta: ScheduleSpec::zero(),
                ..cb
            });
        }
        Variant::Fa => {
            if 1.0 / (1.0 - config.gamma) <= 1.0 {
                return invalid(format!(
                    "fast-decay schedule needs 1/(1-gamma) > 1, got gamma {}",
                    config.gamma
                ));
            }
            resolved.selection = SelectionRule::Boltzmann(BoltzmannParams {
                alpha: ScheduleSpec::fast_decay(config.alpha_init, config.gamma),
                ..cb
            });
        }
        Variant::Independent => {
            resolved.reward = RewardMode::Own;
            resolved.communicate = false;
        }
        Variant::CarDents => {
            resolved.centralized = true;
            resolved.reward = RewardMode::Global;
            resolved.communicate = false;
            // undiscounted statistics in the centralized tree
            resolved.gamma = 1.0;
        }
    }
    Ok(resolved)
}
