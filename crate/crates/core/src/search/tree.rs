use std::cmp::Ordering;

use rand::Rng;

use super::policy::{duct_score, mixed_boltzmann, shannon_entropy, BoltzmannParams};
use super::stats::{Decayed, NodeStats};
use crate::error::{Error, Result};
use crate::types::Action;

/// What the tree needs from a planning problem: enumeration of feasible
/// actions and a deterministic transition.
pub trait SearchDomain {
    type State: Clone;

    /// Feasible actions in ascending order. Empty means the state is terminal
    /// (horizon reached, budget exhausted, or absorbing).
    fn actions(&self, state: &Self::State) -> Vec<Action>;

    fn step(&self, state: &Self::State, action: Action) -> Self::State;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub const ROOT: NodeId = NodeId(0);

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct Node<S> {
    pub parent: Option<NodeId>,
    pub action: Option<Action>,
    pub depth: u32,
    pub state: S,
    pub children: Vec<NodeId>,
    pub terminal: bool,
    pub stats: NodeStats,
    // descending, so `pop` yields the lowest action index first
    untried: Vec<Action>,
    // actions after this node taken by the rollout that last passed through it as a leaf
    completion: Vec<Action>,
}

impl<S> Node<S> {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn untried(&self) -> impl Iterator<Item = Action> + '_ {
        self.untried.iter().rev().copied()
    }

    pub fn completion(&self) -> &[Action] {
        &self.completion
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SelectionRule {
    Boltzmann(BoltzmannParams),
    Duct { epsilon: f64 },
}

/// Result of one selection/expansion pass.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Descent {
    pub leaf: NodeId,
    pub path: Vec<NodeId>,
    pub expanded: bool,
}

/// A ranked root-to-leaf candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Rollout {
    pub actions: Vec<Action>,
    pub value: f64,
    pub count: f64,
}

/// One agent's search tree stored as an arena.
#[derive(Debug, Clone)]
pub struct SearchTree<S> {
    nodes: Vec<Node<S>>,
    gamma: f64,
}

impl<S: Clone> SearchTree<S> {
    pub fn new<D: SearchDomain<State = S>>(domain: &D, root_state: S, gamma: f64) -> Self {
        let mut tree = Self {
            nodes: Vec::new(),
            gamma,
        };
        tree.push(domain, None, None, 0, root_state);
        tree
    }

    fn push<D: SearchDomain<State = S>>(
        &mut self,
        domain: &D,
        parent: Option<NodeId>,
        action: Option<Action>,
        depth: u32,
        state: S,
    ) -> NodeId {
        let mut untried = domain.actions(&state);
        untried.sort_unstable();
        untried.dedup();
        let terminal = untried.is_empty();
        untried.reverse();
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            parent,
            action,
            depth,
            state,
            children: Vec::new(),
            terminal,
            stats: NodeStats::default(),
            untried,
            completion: Vec::new(),
        });
        id
    }

    pub fn root(&self) -> NodeId {
        NodeId::ROOT
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &Node<S> {
        &self.nodes[id.index()]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut Node<S> {
        &mut self.nodes[id.index()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &Node<S>)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn decayed(&self, id: NodeId, now: u64) -> Result<Decayed> {
        self.node(id).stats.decayed_at(self.gamma, now)
    }

    /// Selection distribution over the expanded children of `parent`.
    pub fn policy(&self, parent: NodeId, params: &BoltzmannParams, now: u64) -> Result<Vec<f64>> {
        let node = self.node(parent);
        let parent_count = self.decayed(parent, now)?.count;
        let mut values = Vec::with_capacity(node.children.len());
        let mut entropies = Vec::with_capacity(node.children.len());
        for &c in &node.children {
            let child = self.node(c);
            values.push(self.decayed(c, now)?.value);
            entropies.push(child.stats.entropy);
        }
        Ok(mixed_boltzmann(&values, &entropies, parent_count, params))
    }

    pub fn duct(&self, child: NodeId, parent: NodeId, epsilon: f64, now: u64) -> Result<f64> {
        let c = self.decayed(child, now)?;
        let p = self.decayed(parent, now)?;
        Ok(duct_score(c.value, c.count, p.count, epsilon))
    }

    fn pick_child<R: Rng>(
        &self,
        parent: NodeId,
        rule: &SelectionRule,
        rng: &mut R,
        now: u64,
    ) -> Result<NodeId> {
        let children = &self.node(parent).children;
        match rule {
            SelectionRule::Boltzmann(params) => {
                let pi = self.policy(parent, params, now)?;
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (i, p) in pi.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return Ok(children[i]);
                    }
                }
                Ok(*children
                    .last()
                    .expect("pick_child on a node without children"))
            }
            SelectionRule::Duct { epsilon } => {
                let mut best = children[0];
                let mut best_score = self.duct(best, parent, *epsilon, now)?;
                for &c in &children[1..] {
                    let s = self.duct(c, parent, *epsilon, now)?;
                    if s > best_score {
                        best = c;
                        best_score = s;
                    }
                }
                Ok(best)
            }
        }
    }

    /// Descends from the root until an untried action or a terminal node is
    /// met. Untried actions are expanded lowest index first; exactly one
    /// child is added when expansion happens.
    pub fn select_and_expand<D, R>(
        &mut self,
        domain: &D,
        rule: &SelectionRule,
        rng: &mut R,
        now: u64,
    ) -> Result<Descent>
    where
        D: SearchDomain<State = S>,
        R: Rng,
    {
        let mut current = self.root();
        let mut path = vec![current];
        loop {
            let node = self.node(current);
            if !node.untried.is_empty() {
                let action = self.nodes[current.index()].untried.pop().unwrap();
                let parent = self.node(current);
                let state = domain.step(&parent.state, action);
                let depth = parent.depth + 1;
                let child = self.push(domain, Some(current), Some(action), depth, state);
                self.nodes[current.index()].children.push(child);
                path.push(child);
                return Ok(Descent {
                    leaf: child,
                    path,
                    expanded: true,
                });
            }
            if node.terminal || node.children.is_empty() {
                return Ok(Descent {
                    leaf: current,
                    path,
                    expanded: false,
                });
            }
            current = self.pick_child(current, rule, rng, now)?;
            path.push(current);
        }
    }

    /// Records the reward on every node of `path`; when `entropy` is given,
    /// re-estimates each internal node's entropy bottom-up from its current
    /// selection distribution.
    pub fn backpropagate(
        &mut self,
        path: &[NodeId],
        reward: f64,
        entropy: Option<&BoltzmannParams>,
        now: u64,
    ) -> Result<()> {
        let gamma = self.gamma;
        for &id in path {
            self.nodes[id.index()]
                .stats
                .record_visit(reward, gamma, now)?;
        }
        if let Some(params) = entropy {
            for &id in path.iter().rev() {
                if self.node(id).children.is_empty() {
                    continue;
                }
                let pi = self.policy(id, params, now)?;
                let downstream: f64 = self
                    .node(id)
                    .children
                    .iter()
                    .zip(&pi)
                    .map(|(c, p)| p * self.node(*c).stats.entropy)
                    .sum();
                self.nodes[id.index()].stats.entropy = shannon_entropy(&pi) + downstream;
            }
        }
        Ok(())
    }

    pub fn set_completion(&mut self, id: NodeId, actions: Vec<Action>) {
        self.nodes[id.index()].completion = actions;
    }

    pub fn path_actions(&self, id: NodeId) -> Vec<Action> {
        let mut actions = Vec::with_capacity(self.node(id).depth as usize);
        let mut cur = id;
        while let Some(parent) = self.node(cur).parent {
            actions.push(self.node(cur).action.unwrap());
            cur = parent;
        }
        actions.reverse();
        actions
    }

    /// Path to `id` followed by the node's stored rollout completion.
    pub fn full_sequence(&self, id: NodeId) -> Vec<Action> {
        let mut actions = self.path_actions(id);
        actions.extend_from_slice(&self.node(id).completion);
        actions
    }

    /// Up to `k` distinct leaf sequences ordered by value, then effective
    /// count, then lexicographically.
    pub fn top_rollouts(&self, k: usize, now: u64) -> Result<Vec<Rollout>> {
        if self.node(self.root()).stats.stored_count <= 0.0 {
            return Err(Error::EmptyTree);
        }
        let mut leaves = Vec::new();
        for (id, node) in self.nodes() {
            if node.is_leaf() && node.stats.stored_count > 0.0 {
                let d = self.decayed(id, now)?;
                leaves.push(Rollout {
                    actions: self.full_sequence(id),
                    value: d.value,
                    count: d.count,
                });
            }
        }
        leaves.sort_by(rank_rollouts);
        leaves.dedup_by(|a, b| a.actions == b.actions);
        leaves.truncate(k);
        Ok(leaves)
    }

    /// Follows the highest-value child from the root and returns the
    /// resulting full sequence.
    pub fn greedy_sequence(&self, now: u64) -> Result<Vec<Action>> {
        let mut cur = self.root();
        loop {
            let node = self.node(cur);
            if node.children.is_empty() {
                return Ok(self.full_sequence(cur));
            }
            let mut best = node.children[0];
            let mut best_d = self.decayed(best, now)?;
            for &c in &node.children[1..] {
                let d = self.decayed(c, now)?;
                if d.value > best_d.value || (d.value == best_d.value && d.count > best_d.count) {
                    best = c;
                    best_d = d;
                }
            }
            cur = best;
        }
    }
}

fn rank_rollouts(a: &Rollout, b: &Rollout) -> Ordering {
    b.value
        .total_cmp(&a.value)
        .then(b.count.total_cmp(&a.count))
        .then_with(|| a.actions.cmp(&b.actions))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::schedule::ScheduleSpec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Binary tree of fixed depth: state is the depth.
    struct Binary(u32);

    impl SearchDomain for Binary {
        type State = u32;
        fn actions(&self, s: &u32) -> Vec<Action> {
            if *s < self.0 {
                vec![0, 1]
            } else {
                vec![]
            }
        }
        fn step(&self, s: &u32, _a: Action) -> u32 {
            s + 1
        }
    }

    fn cb_params() -> BoltzmannParams {
        BoltzmannParams {
            alpha: ScheduleSpec::inverse_log(1.0),
            beta: ScheduleSpec::inverse_log(1.0),
            epsilon: 0.5,
        }
    }

    #[test]
    fn first_descent_expands_lowest_action() {
        let d = Binary(3);
        let mut t = SearchTree::new(&d, 0, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let desc = t
            .select_and_expand(&d, &SelectionRule::Boltzmann(cb_params()), &mut rng, 0)
            .unwrap();
        assert!(desc.expanded);
        assert_eq!(desc.path, vec![t.root(), desc.leaf]);
        assert_eq!(t.node(desc.leaf).action, Some(0));
    }

    #[test]
    fn duct_descends_through_best_child() {
        let d = Binary(2);
        let mut t = SearchTree::new(&d, 0, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rule = SelectionRule::Duct { epsilon: 1.0 };
        for (now, r) in [(0, 0.9), (1, 0.3)] {
            let desc = t.select_and_expand(&d, &rule, &mut rng, now).unwrap();
            t.backpropagate(&desc.path, r, None, now).unwrap();
        }
        let desc = t.select_and_expand(&d, &rule, &mut rng, 2).unwrap();
        assert_eq!(t.node(desc.path[1]).action, Some(0));
    }

    #[test]
    fn terminal_node_is_returned_unchanged() {
        let d = Binary(0);
        let mut t = SearchTree::new(&d, 0, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let desc = t
            .select_and_expand(&d, &SelectionRule::Duct { epsilon: 1.0 }, &mut rng, 0)
            .unwrap();
        assert!(!desc.expanded);
        assert_eq!(desc.path, vec![t.root()]);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn boltzmann_replay_is_identical() {
        let run = || {
            let d = Binary(6);
            let mut t = SearchTree::new(&d, 0, 0.9);
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut paths = Vec::new();
            for now in 0..200u64 {
                let desc = t
                    .select_and_expand(&d, &SelectionRule::Boltzmann(cb_params()), &mut rng, now)
                    .unwrap();
                let r = (desc.leaf.index() % 7) as f64 / 7.0;
                t.backpropagate(&desc.path, r, Some(&cb_params()), now)
                    .unwrap();
                paths.push(desc.path);
            }
            paths
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn entropy_of_two_equal_leaves_is_ln2() {
        let d = Binary(1);
        let mut t = SearchTree::new(&d, 0, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = cb_params();
        for now in 0..2 {
            let desc = t
                .select_and_expand(&d, &SelectionRule::Boltzmann(p), &mut rng, now)
                .unwrap();
            t.backpropagate(&desc.path, 0.5, Some(&p), now).unwrap();
        }
        assert!((t.node(t.root()).stats.entropy - std::f64::consts::LN_2).abs() < 1e-12);
        for &c in &t.node(t.root()).children {
            assert_eq!(t.node(c).stats.entropy, 0.0);
        }
    }

    /// Single-action chain of the given length.
    struct Line(u32);

    impl SearchDomain for Line {
        type State = u32;
        fn actions(&self, s: &u32) -> Vec<Action> {
            if *s < self.0 {
                vec![0]
            } else {
                vec![]
            }
        }
        fn step(&self, s: &u32, _a: Action) -> u32 {
            s + 1
        }
    }

    #[test]
    fn single_child_inherits_child_entropy() {
        let d = Line(3);
        let mut t = SearchTree::new(&d, 0, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = cb_params();
        for now in 0..2 {
            let desc = t
                .select_and_expand(&d, &SelectionRule::Boltzmann(p), &mut rng, now)
                .unwrap();
            t.backpropagate(&desc.path, 0.5, Some(&p), now).unwrap();
        }
        let root = t.node(t.root());
        assert_eq!(root.children.len(), 1);
        let child = root.children[0];
        assert!((root.stats.entropy - t.node(child).stats.entropy).abs() < 1e-15);
    }

    #[test]
    fn top_rollouts_ordering() {
        let d = Binary(1);
        let mut t = SearchTree::new(&d, 0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rule = SelectionRule::Duct { epsilon: 0.0 };
        let a = t.select_and_expand(&d, &rule, &mut rng, 0).unwrap();
        t.backpropagate(&a.path, 0.5, None, 0).unwrap();
        let b = t.select_and_expand(&d, &rule, &mut rng, 1).unwrap();
        t.backpropagate(&b.path, 0.9, None, 1).unwrap();
        let top = t.top_rollouts(5, 2).unwrap();
        assert_eq!(top.len(), 2);
        assert_eq!(top[0].actions, vec![1]);
        assert_eq!(top[1].actions, vec![0]);
        assert_eq!(t.top_rollouts(1, 2).unwrap().len(), 1);
    }

    #[test]
    fn equal_values_rank_by_count() {
        let d = Binary(1);
        let mut t = SearchTree::new(&d, 0, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rule = SelectionRule::Duct { epsilon: 0.0 };
        let a = t.select_and_expand(&d, &rule, &mut rng, 0).unwrap();
        t.backpropagate(&a.path, 0.5, None, 0).unwrap();
        let b = t.select_and_expand(&d, &rule, &mut rng, 1).unwrap();
        for now in 1..4 {
            t.backpropagate(&b.path, 0.5, None, now).unwrap();
        }
        let top = t.top_rollouts(2, 4).unwrap();
        assert_eq!(top[0].actions, vec![1]);
        assert_eq!(top[0].count, 3.0);
    }

    #[test]
    fn empty_tree_cannot_rank() {
        let d = Binary(2);
        let t = SearchTree::new(&d, 0, 0.9);
        assert!(matches!(t.top_rollouts(3, 0), Err(Error::EmptyTree)));
    }
}
