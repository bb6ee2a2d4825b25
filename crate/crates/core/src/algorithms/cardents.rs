//! Centralized baseline: one tree whose layers alternate between agents.

use std::time::Instant;

use super::config::ResolvedConfig;
use super::decentralized::random_rollout;
use super::{agent_rng, prefixes_for, EpisodeOptions, EpisodeResult, Snapshot};
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::search::{SearchDomain, SearchTree};
use crate::types::{Action, ActionSequence, AgentId};

/// Joint state of all agents plus whose turn it is. `actor` always points to
/// an agent that still has a feasible action, or is `None` when all are done.
#[derive(Debug, Clone)]
pub struct JointState<S> {
    pub states: Vec<S>,
    pub actor: Option<AgentId>,
}

/// Round-robin interleaving of the agents' transition systems. Agents with
/// no feasible action are skipped.
pub struct InterleavedDomain<'e, E: Environment> {
    env: &'e E,
}

impl<'e, E: Environment> InterleavedDomain<'e, E> {
    pub fn new(env: &'e E) -> Self {
        Self { env }
    }

    fn next_actor(&self, states: &[E::State], from: AgentId) -> Option<AgentId> {
        let n = states.len();
        (0..n)
            .map(|k| (from + k) % n)
            .find(|&a| !self.env.actions(a, &states[a]).is_empty())
    }

    pub fn initial(&self, states: Vec<E::State>) -> JointState<E::State> {
        let actor = self.next_actor(&states, 0);
        JointState { states, actor }
    }

    /// Splits an interleaved action list into per-agent sequences appended to `prefixes`.
    pub fn decode(
        &self,
        root: &JointState<E::State>,
        actions: &[Action],
        prefixes: &[Vec<Action>],
    ) -> Vec<ActionSequence> {
        let mut seqs: Vec<ActionSequence> = prefixes
            .iter()
            .enumerate()
            .map(|(i, p)| ActionSequence::new(i, p.clone()))
            .collect();
        let mut state = root.clone();
        for &a in actions {
            let actor = state.actor.expect("action after every agent finished");
            seqs[actor].actions.push(a);
            state = self.step(&state, a);
        }
        seqs
    }
}

impl<E: Environment> SearchDomain for InterleavedDomain<'_, E> {
    type State = JointState<E::State>;

    fn actions(&self, state: &Self::State) -> Vec<Action> {
        match state.actor {
            Some(a) => self.env.actions(a, &state.states[a]),
            None => Vec::new(),
        }
    }

    fn step(&self, state: &Self::State, action: Action) -> Self::State {
        let actor = state.actor.expect("step on a finished joint state");
        let mut states = state.states.clone();
        states[actor] = self.env.step(actor, &states[actor], action);
        let n = states.len();
        let next = self.next_actor(&states, (actor + 1) % n);
        JointState {
            states,
            actor: next,
        }
    }
}

/// Plans all agents in one Boltzmann tree with entropy backup. Rewards are
/// the normalized global utility of the decoded joint plan; the
/// recommendation follows the highest-value child from the root.
pub fn plan_car_dents<E: Environment>(
    env: &E,
    config: &ResolvedConfig,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeResult> {
    let started = Instant::now();
    let prefixes = prefixes_for(env, options);
    let mut starts = Vec::with_capacity(env.agent_count());
    for (id, prefix) in prefixes.iter().enumerate() {
        let (s, _) = env.replay(id, prefix).ok_or(Error::InfeasibleStart(id))?;
        if prefix.is_empty() && env.actions(id, &s).is_empty() {
            return Err(Error::InfeasibleStart(id));
        }
        starts.push(s);
    }
    let domain = InterleavedDomain::new(env);
    let root = domain.initial(starts);
    let mut tree = SearchTree::new(&domain, root.clone(), config.gamma);
    let mut rng = agent_rng(seed, 0);
    let entropy = if config.track_entropy {
        config.boltzmann()
    } else {
        None
    };

    let budget = config.planning_budget;
    let mut trace = Vec::new();
    let recommend =
        |tree: &SearchTree<JointState<E::State>>, now: u64| -> Result<Vec<ActionSequence>> {
            Ok(domain.decode(&root, &tree.greedy_sequence(now)?, &prefixes))
        };

    for t in 0..budget as u64 {
        let descent = tree.select_and_expand(&domain, &config.selection, &mut rng, t)?;
        let leaf_state = tree.node(descent.leaf).state.clone();
        let completion = random_rollout(&domain, &leaf_state, &mut rng);
        let mut actions = tree.path_actions(descent.leaf);
        actions.extend_from_slice(&completion);
        tree.set_completion(descent.leaf, completion);
        let joint = domain.decode(&root, &actions, &prefixes);
        let refs: Vec<&ActionSequence> = joint.iter().collect();
        let reward = env.normalized_utility(&refs);
        tree.backpropagate(&descent.path, reward, entropy, t)?;

        let done = t as usize + 1;
        if let Some(every) = options.snapshot_every.filter(|&s| s > 0) {
            if done.is_multiple_of(every) || done == budget {
                trace.push(Snapshot {
                    iteration: done,
                    plans: recommend(&tree, t + 1)?,
                });
            }
        }
    }
    let plans = recommend(&tree, budget as u64)?;
    Ok(EpisodeResult {
        plans,
        trace,
        iterations: budget,
        wallclock: started.elapsed(),
    })
}
