//! Cooperative planning problems behind one interface.

pub mod coverage;
pub mod dchain;
pub mod frozen_lake;

use std::fmt::Debug;

use crate::search::SearchDomain;
use crate::types::{Action, ActionSequence, AgentId};

pub use coverage::{
    synthesize_coverage_instance, Edge, GraphCoverage, GraphCoverageSpec, Target, Vertex,
};
pub use dchain::{CustomRules, DeceptiveTree, DeceptiveTreeSpec, RewardVariant, SubtreeState};
pub use frozen_lake::{Cell, FrozenLake, FrozenLakeMap};

/// A cooperative multi-agent planning problem.
///
/// Every agent walks its own deterministic transition system; the team is
/// scored by a joint utility `g` over any subset of the agents' sequences.
/// Bundled utilities satisfy `g(empty) = 0`, monotonicity under adding a
/// sequence, and `g <= utility_bound()`.
pub trait Environment: Send + Sync {
    type State: Clone + Debug + Send + Sync;

    fn agent_count(&self) -> usize;

    fn start_state(&self, agent: AgentId) -> Self::State;

    /// Feasible actions in ascending order; empty when the agent is done.
    fn actions(&self, agent: AgentId, state: &Self::State) -> Vec<Action>;

    fn step(&self, agent: AgentId, state: &Self::State, action: Action) -> Self::State;

    /// Raw joint utility.
    fn utility(&self, sequences: &[&ActionSequence]) -> f64;

    /// Declared upper bound on [`Environment::utility`].
    fn utility_bound(&self) -> f64;

    /// Utility divided by the bound, clamped into `[0, 1]`.
    fn normalized_utility(&self, sequences: &[&ActionSequence]) -> f64 {
        (self.utility(sequences) / self.utility_bound()).clamp(0.0, 1.0)
    }

    /// Cost of an action, in the environment's budget units.
    fn action_cost(&self, _agent: AgentId, _state: &Self::State, _action: Action) -> f64 {
        1.0
    }

    /// Replays `actions` from the start state, returning the final state and
    /// the accumulated cost, or `None` if some action is infeasible.
    fn replay(&self, agent: AgentId, actions: &[Action]) -> Option<(Self::State, f64)> {
        let mut state = self.start_state(agent);
        let mut cost = 0.0;
        for &a in actions {
            if !self.actions(agent, &state).contains(&a) {
                return None;
            }
            cost += self.action_cost(agent, &state, a);
            state = self.step(agent, &state, a);
        }
        Some((state, cost))
    }

    fn is_feasible(&self, sequence: &ActionSequence) -> bool {
        sequence.agent < self.agent_count()
            && self.replay(sequence.agent, &sequence.actions).is_some()
    }
}

/// One agent's view of an environment, optionally started after an executed prefix.
pub struct AgentDomain<'a, E: Environment> {
    pub env: &'a E,
    pub agent: AgentId,
}

impl<'a, E: Environment> AgentDomain<'a, E> {
    pub fn new(env: &'a E, agent: AgentId) -> Self {
        Self { env, agent }
    }
}

impl<E: Environment> SearchDomain for AgentDomain<'_, E> {
    type State = E::State;

    fn actions(&self, state: &E::State) -> Vec<Action> {
        self.env.actions(self.agent, state)
    }

    fn step(&self, state: &E::State, action: Action) -> E::State {
        self.env.step(self.agent, state, action)
    }
}

/// Borrowed view used when handing a joint profile to `utility`.
pub fn as_refs(seqs: &[ActionSequence]) -> Vec<&ActionSequence> {
    seqs.iter().collect()
}
