//! Multi-agent D-chain and generalized deceptive trees.
//!
//! Depth counts edges from the root. Main-chain decision nodes sit at depths
//! `0..D`; action 0 (the "progressing" action) moves one level down the
//! chain, every other action branches off. From the last decision node
//! (depth `D - 1`) action 0 yields the unique reward-1 leaf and the other
//! actions yield 0.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::types::{Action, ActionSequence, AgentId};

/// Location of a node inside a branch-off subtree, handed to custom rules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubtreeState {
    /// Depth of the main-chain node the subtree hangs from.
    pub branch_depth: usize,
    /// Actions taken from that main-chain node, starting with the branching action.
    pub path: Vec<Action>,
}

impl SubtreeState {
    pub fn depth(&self) -> usize {
        self.branch_depth + self.path.len()
    }
}

type TermFn = dyn Fn(&SubtreeState, usize) -> bool + Send + Sync;
type ValueFn = dyn Fn(&SubtreeState) -> f64 + Send + Sync;

/// Termination rule and leaf value for generalized subtrees.
#[derive(Clone)]
pub struct CustomRules {
    pub terminate: Arc<TermFn>,
    pub value: Arc<ValueFn>,
    /// Construction fails if a subtree is still open at this absolute depth.
    pub depth_cap: usize,
}

impl fmt::Debug for CustomRules {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomRules")
            .field("depth_cap", &self.depth_cap)
            .finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum RewardVariant {
    /// Branching off at depth `d` pays `(D - d) / D`.
    Standard,
    /// Branching off at depth `d` pays `(D - d + 1) / (2D)`.
    Modified,
    Custom(CustomRules),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimpleVariant {
    Standard,
    Modified,
}

impl From<SimpleVariant> for RewardVariant {
    fn from(v: SimpleVariant) -> Self {
        match v {
            SimpleVariant::Standard => RewardVariant::Standard,
            SimpleVariant::Modified => RewardVariant::Modified,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeceptiveTreeSpec {
    pub depth: usize,
    pub branching: usize,
    pub agents: usize,
    pub variant: RewardVariant,
}

impl DeceptiveTreeSpec {
    pub fn standard(depth: usize, branching: usize, agents: usize) -> Self {
        Self {
            depth,
            branching,
            agents,
            variant: RewardVariant::Standard,
        }
    }

    pub fn modified(depth: usize, branching: usize, agents: usize) -> Self {
        Self {
            depth,
            branching,
            agents,
            variant: RewardVariant::Modified,
        }
    }
}

#[derive(Debug, Clone)]
struct TreeNode {
    children: Vec<u32>,
    reward: f64,
    depth: usize,
}

/// The materialized deceptive tree. Agent state is a node index.
#[derive(Debug, Clone)]
pub struct DeceptiveTree {
    depth: usize,
    branching: usize,
    agents: usize,
    nodes: Vec<TreeNode>,
    bound: f64,
}

const NODE_LIMIT: usize = 5_000_000;

impl DeceptiveTree {
    pub fn build(spec: &DeceptiveTreeSpec) -> Result<Self> {
        if spec.depth < 1 || spec.branching < 2 || spec.agents < 1 {
            return Err(Error::Construction(format!(
                "deceptive tree needs D >= 1, K >= 2, N >= 1 (got D={}, K={}, N={})",
                spec.depth, spec.branching, spec.agents
            )));
        }
        let mut tree = DeceptiveTree {
            depth: spec.depth,
            branching: spec.branching,
            agents: spec.agents,
            nodes: vec![TreeNode {
                children: Vec::new(),
                reward: 0.0,
                depth: 0,
            }],
            bound: 1.0,
        };
        tree.build_main(0, 0, &spec.variant)?;

        let mut leaf_rewards: Vec<f64> = tree
            .nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .map(|n| n.reward)
            .collect();
        leaf_rewards.sort_by(|a, b| b.total_cmp(a));
        let top: f64 = leaf_rewards.iter().take(spec.agents).sum();
        tree.bound = if top > 0.0 { top } else { 1.0 };
        Ok(tree)
    }

    fn add(&mut self, parent: u32, reward: f64, depth: usize) -> Result<u32> {
        if self.nodes.len() >= NODE_LIMIT {
            return Err(Error::Construction(format!(
                "deceptive tree exceeds {NODE_LIMIT} nodes"
            )));
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(TreeNode {
            children: Vec::new(),
            reward,
            depth,
        });
        self.nodes[parent as usize].children.push(id);
        Ok(id)
    }

    fn build_main(&mut self, node: u32, d: usize, variant: &RewardVariant) -> Result<()> {
        let big_d = self.depth as f64;
        for a in 0..self.branching {
            if d + 1 == self.depth {
                self.add(node, if a == 0 { 1.0 } else { 0.0 }, d + 1)?;
            } else if a == 0 {
                let child = self.add(node, 0.0, d + 1)?;
                self.build_main(child, d + 1, variant)?;
            } else {
                let leaf_depth = (d + 1) as f64;
                match variant {
                    RewardVariant::Standard => {
                        self.add(node, (big_d - leaf_depth) / big_d, d + 1)?;
                    }
                    RewardVariant::Modified => {
                        self.add(node, (big_d - leaf_depth + 1.0) / (2.0 * big_d), d + 1)?;
                    }
                    RewardVariant::Custom(rules) => {
                        let child = self.add(node, 0.0, d + 1)?;
                        let s = SubtreeState {
                            branch_depth: d,
                            path: vec![a as Action],
                        };
                        self.build_subtree(child, s, rules)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn build_subtree(&mut self, node: u32, s: SubtreeState, rules: &CustomRules) -> Result<()> {
        let depth = s.depth();
        if (rules.terminate)(&s, depth) {
            let v = (rules.value)(&s);
            if !(0.0..1.0).contains(&v) {
                return Err(Error::Construction(format!(
                    "subtree value {v} outside [0, 1)"
                )));
            }
            self.nodes[node as usize].reward = v;
            return Ok(());
        }
        if depth >= rules.depth_cap {
            return Err(Error::Construction(format!(
                "termination rule did not fire by depth cap {}",
                rules.depth_cap
            )));
        }
        for a in 0..self.branching {
            let child = self.add(node, 0.0, depth + 1)?;
            let mut next = s.clone();
            next.path.push(a as Action);
            self.build_subtree(child, next, rules)?;
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn branching(&self) -> usize {
        self.branching
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Leaf reached by `actions`, if the sequence ends exactly on a leaf.
    pub fn leaf_of(&self, actions: &[Action]) -> Option<u32> {
        let mut cur = 0u32;
        for &a in actions {
            cur = *self.nodes[cur as usize].children.get(a as usize)?;
        }
        self.nodes[cur as usize].children.is_empty().then_some(cur)
    }

    pub fn leaf_reward(&self, leaf: u32) -> f64 {
        self.nodes[leaf as usize].reward
    }

    pub fn leaf_depth(&self, leaf: u32) -> usize {
        self.nodes[leaf as usize].depth
    }

    /// Sum of rewards over the distinct leaves reached.
    pub fn joint_leaf_utility(&self, sequences: &[&ActionSequence]) -> f64 {
        let mut leaves: Vec<u32> = sequences
            .iter()
            .filter_map(|s| self.leaf_of(&s.actions))
            .collect();
        leaves.sort_unstable();
        leaves.dedup();
        leaves.iter().map(|&l| self.leaf_reward(l)).sum()
    }
}

impl Environment for DeceptiveTree {
    type State = u32;

    fn agent_count(&self) -> usize {
        self.agents
    }

    fn start_state(&self, _agent: AgentId) -> u32 {
        0
    }

    fn actions(&self, _agent: AgentId, state: &u32) -> Vec<Action> {
        (0..self.nodes[*state as usize].children.len() as Action).collect()
    }

    fn step(&self, _agent: AgentId, state: &u32, action: Action) -> u32 {
        self.nodes[*state as usize].children[action as usize]
    }

    fn utility(&self, sequences: &[&ActionSequence]) -> f64 {
        self.joint_leaf_utility(sequences)
    }

    fn utility_bound(&self) -> f64 {
        self.bound
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(agent: usize, actions: &[Action]) -> ActionSequence {
        ActionSequence::new(agent, actions.to_vec())
    }

    fn chain(n: usize) -> Vec<Action> {
        vec![0; n]
    }

    #[test]
    fn standard_rewards() {
        let t = DeceptiveTree::build(&DeceptiveTreeSpec::standard(10, 2, 2)).unwrap();
        let l = t.leaf_of(&[1]).unwrap();
        assert!((t.leaf_reward(l) - 0.9).abs() < 1e-15);
        assert_eq!(t.leaf_depth(l), 1);
        assert_eq!(t.leaf_reward(t.leaf_of(&chain(10)).unwrap()), 1.0);
        let mut sib = chain(9);
        sib.push(1);
        assert_eq!(t.leaf_reward(t.leaf_of(&sib).unwrap()), 0.0);
    }

    #[test]
    fn modified_rewards() {
        let t = DeceptiveTree::build(&DeceptiveTreeSpec::modified(10, 2, 2)).unwrap();
        assert!((t.leaf_reward(t.leaf_of(&[1]).unwrap()) - 0.5).abs() < 1e-15);
        assert_eq!(t.leaf_reward(t.leaf_of(&chain(10)).unwrap()), 1.0);
    }

    #[test]
    fn unique_reward_one_leaf() {
        let t = DeceptiveTree::build(&DeceptiveTreeSpec::standard(6, 3, 1)).unwrap();
        let ones = t
            .nodes
            .iter()
            .filter(|n| n.children.is_empty() && n.reward == 1.0)
            .count();
        assert_eq!(ones, 1);
        // (K-1) * D + 1 leaves
        let leaves = t.nodes.iter().filter(|n| n.children.is_empty()).count();
        assert_eq!(leaves, 2 * 6 + 1);
    }

    #[test]
    fn joint_utility_counts_distinct_leaves() {
        let t = DeceptiveTree::build(&DeceptiveTreeSpec::standard(10, 2, 2)).unwrap();
        let a = seq(0, &chain(10));
        let b = seq(1, &chain(10));
        assert_eq!(t.utility(&[&a, &b]), 1.0);
        let c = seq(1, &[1]);
        assert!((t.utility(&[&a, &c]) - 1.9).abs() < 1e-12);
        assert_eq!(t.utility(&[]), 0.0);
        assert!((t.utility_bound() - 1.9).abs() < 1e-12);
    }

    #[test]
    fn d3_pair_is_five_thirds() {
        let t = DeceptiveTree::build(&DeceptiveTreeSpec::standard(3, 2, 2)).unwrap();
        let a = seq(0, &chain(3));
        let b = seq(1, &[1]);
        assert!((t.utility(&[&a, &b]) - 5.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn partial_sequences_score_nothing() {
        let t = DeceptiveTree::build(&DeceptiveTreeSpec::standard(4, 2, 1)).unwrap();
        assert_eq!(t.utility(&[&seq(0, &[0, 0])]), 0.0);
    }

    #[test]
    fn custom_immediate_matches_standard() {
        let d = 7;
        let rules = CustomRules {
            terminate: Arc::new(|_, _| true),
            value: Arc::new(move |s: &SubtreeState| (d as f64 - s.depth() as f64) / d as f64),
            depth_cap: 100,
        };
        let custom = DeceptiveTree::build(&DeceptiveTreeSpec {
            depth: d,
            branching: 3,
            agents: 2,
            variant: RewardVariant::Custom(rules),
        })
        .unwrap();
        let standard = DeceptiveTree::build(&DeceptiveTreeSpec::standard(d, 3, 2)).unwrap();
        assert_eq!(custom.node_count(), standard.node_count());
        for (a, b) in custom.nodes.iter().zip(&standard.nodes) {
            assert_eq!(a.children, b.children);
            assert!((a.reward - b.reward).abs() < 1e-15);
        }
    }

    #[test]
    fn custom_subtrees_expand_until_rule_fires() {
        let rules = CustomRules {
            terminate: Arc::new(|s: &SubtreeState, _| s.path.len() >= 2),
            value: Arc::new(|_| 0.25),
            depth_cap: 50,
        };
        let t = DeceptiveTree::build(&DeceptiveTreeSpec {
            depth: 3,
            branching: 2,
            agents: 1,
            variant: RewardVariant::Custom(rules),
        })
        .unwrap();
        let l = t.leaf_of(&[1, 0]).unwrap();
        assert_eq!(t.leaf_reward(l), 0.25);
        assert!(t.leaf_of(&[1]).is_none());
    }

    #[test]
    fn custom_runaway_rule_is_rejected() {
        let rules = CustomRules {
            terminate: Arc::new(|_, _| false),
            value: Arc::new(|_| 0.0),
            depth_cap: 8,
        };
        let r = DeceptiveTree::build(&DeceptiveTreeSpec {
            depth: 3,
            branching: 2,
            agents: 1,
            variant: RewardVariant::Custom(rules),
        });
        assert!(matches!(r, Err(Error::Construction(_))));
    }

    #[test]
    fn bad_shape_rejected() {
        assert!(DeceptiveTree::build(&DeceptiveTreeSpec::standard(0, 2, 1)).is_err());
        assert!(DeceptiveTree::build(&DeceptiveTreeSpec::standard(3, 1, 1)).is_err());
        assert!(DeceptiveTree::build(&DeceptiveTreeSpec::standard(3, 2, 0)).is_err());
    }
}
