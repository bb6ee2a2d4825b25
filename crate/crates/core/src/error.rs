use thiserror::Error;

/// Errors surfaced by the planning library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("clock went backwards: read at iteration {now} but stats were written at {last}")]
    NonMonotoneClock { now: u64, last: u64 },

    #[error("reward {0} lies outside [0, 1]")]
    RewardOutOfRange(f64),

    #[error("compression before any rollout")]
    EmptyTree,

    #[error("plan has no candidates")]
    EmptyPlan,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("environment construction failed: {0}")]
    Construction(String),

    #[error("map generation gave up after {0} attempts")]
    MapGeneration(usize),

    #[error("agent {0} has no valid action at its start state")]
    InfeasibleStart(usize),

    #[error("joint sequence space ({size}) exceeds enumeration cap {cap}; shrink the instance")]
    EnumerationCap { size: u128, cap: u128 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
