//! Planner assembly: the decentralized loop, the centralized baseline and
//! the online replanning driver.

pub mod cardents;
pub mod config;
pub mod decentralized;
pub mod replan;

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::env::Environment;
use crate::error::Result;
use crate::types::{Action, ActionSequence};

pub use cardents::plan_car_dents;
pub use config::{apply_variant_schedules, PlannerConfig, ResolvedConfig, RewardMode, Variant};
pub use decentralized::plan_decentralized_episode;
pub use replan::{online_replan_loop, ReplanResult};

/// Recommended joint plan at some point of the search.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub iteration: usize,
    pub plans: Vec<ActionSequence>,
}

#[derive(Debug, Clone)]
pub struct EpisodeResult {
    /// Final recommendation per agent, indexed by agent id.
    pub plans: Vec<ActionSequence>,
    pub trace: Vec<Snapshot>,
    pub iterations: usize,
    pub wallclock: Duration,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeOptions {
    /// Record the recommendation every this many iterations (plus at the end).
    pub snapshot_every: Option<usize>,
    /// Run agents on the rayon pool between exchange barriers.
    pub parallel: bool,
    /// Already-executed actions per agent; planning continues after them.
    pub prefixes: Option<Vec<Vec<Action>>>,
}

/// Dispatches to the centralized or decentralized planner.
pub fn plan_episode<E: Environment>(
    env: &E,
    config: &ResolvedConfig,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeResult> {
    if config.centralized {
        plan_car_dents(env, config, seed, options)
    } else {
        plan_decentralized_episode(env, config, seed, options)
    }
}

/// SplitMix64 finalizer, used to derive independent seeds.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-agent random stream: one ChaCha stream per agent under the trial seed.
pub fn agent_rng(seed: u64, agent: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(agent as u64 + 1);
    rng
}

pub(crate) fn prefixes_for<E: Environment>(env: &E, options: &EpisodeOptions) -> Vec<Vec<Action>> {
    options
        .prefixes
        .clone()
        .unwrap_or_else(|| vec![Vec::new(); env.agent_count()])
}
