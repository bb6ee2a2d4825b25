//! Decentralized multi-agent Monte Carlo Tree Search.
//!
//! Each agent grows its own search tree with discounted statistics and a
//! Boltzmann selection policy carrying a decaying entropy bonus. Agents
//! coordinate by periodically exchanging compressed plan distributions and
//! scoring their rollouts by marginal contribution to the team utility.
//!
//! The crate also bundles the benchmark environments (deceptive D-chain
//! trees, multi-goal Frozen Lake, budgeted graph coverage), a brute-force
//! optimality oracle, and an experiment harness that emits CSV/JSON reports.

pub mod algorithms;
pub mod coordination;
pub mod env;
pub mod error;
pub mod harness;
pub mod oracle;
pub mod search;
pub mod types;

pub use algorithms::{
    apply_variant_schedules, online_replan_loop, plan_car_dents, plan_decentralized_episode,
    plan_episode, EpisodeOptions, EpisodeResult, PlannerConfig, ResolvedConfig, RewardMode,
    Snapshot, Variant,
};
pub use coordination::{CompressedPlan, PlanTable};
pub use env::Environment;
pub use error::{Error, Result};
pub use types::{Action, ActionSequence, AgentId};
