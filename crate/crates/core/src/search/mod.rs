//! Per-agent search tree with discounted statistics and entropy-aware backup.

pub mod policy;
pub mod schedule;
pub mod stats;
pub mod tree;

pub use policy::{
    boltzmann_weights, duct_score, mixed_boltzmann, shannon_entropy, softmax, uniform_mix,
    BoltzmannParams, ALPHA_FLOOR,
};
pub use schedule::{ScheduleKind, ScheduleSpec};
pub use stats::{Decayed, NodeStats};
pub use tree::{Descent, Node, NodeId, Rollout, SearchDomain, SearchTree, SelectionRule};
