//! Compressed plan exchange between agents.
//!
//! Each agent periodically summarizes its tree as a handful of candidate
//! action sequences with a probability mass function over them. Teammates
//! sample from these summaries to evaluate their own rollouts.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::search::{policy::softmax, SearchTree};
use crate::types::{Action, ActionSequence, AgentId};

/// An agent's candidate set and the distribution over it.
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedPlan {
    pub agent: AgentId,
    pub candidates: Vec<ActionSequence>,
    /// Leaf value estimates from the tree, aligned with `candidates`.
    pub values: Vec<f64>,
    pub pmf: Vec<f64>,
}

impl CompressedPlan {
    pub fn single(sequence: ActionSequence, value: f64) -> Self {
        Self {
            agent: sequence.agent,
            candidates: vec![sequence],
            values: vec![value],
            pmf: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> &ActionSequence {
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (c, p) in self.candidates.iter().zip(&self.pmf) {
            acc += p;
            if u < acc {
                return c;
            }
        }
        self.candidates.last().unwrap()
    }
}

/// The latest published plan of every other agent.
#[derive(Debug, Clone, Default)]
pub struct PlanTable {
    plans: BTreeMap<AgentId, Arc<CompressedPlan>>,
}

impl PlanTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the agent's entry wholesale.
    pub fn publish(&mut self, plan: Arc<CompressedPlan>) {
        self.plans.insert(plan.agent, plan);
    }

    pub fn get(&self, agent: AgentId) -> Option<&CompressedPlan> {
        self.plans.get(&agent).map(|p| p.as_ref())
    }

    pub fn len(&self) -> usize {
        self.plans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.plans.is_empty()
    }

    /// The table as seen by `agent`: everyone but itself.
    pub fn without(&self, agent: AgentId) -> PlanTable {
        let plans = self
            .plans
            .iter()
            .filter(|(a, _)| **a != agent)
            .map(|(a, p)| (*a, p.clone()))
            .collect();
        PlanTable { plans }
    }

    pub fn iter(&self) -> impl Iterator<Item = &CompressedPlan> {
        self.plans.values().map(|p| p.as_ref())
    }
}

/// Draws one sequence per agent in the table according to its pmf, in agent order.
pub fn sample_joint_actions<'t, R: Rng>(
    table: &'t PlanTable,
    rng: &mut R,
) -> Vec<&'t ActionSequence> {
    table.plans.values().map(|p| p.draw(rng)).collect()
}

/// `g(own + others) - g(others)` on normalized utilities, clamped into `[0, 1]`.
pub fn marginal_contribution<E: Environment>(
    env: &E,
    own: &ActionSequence,
    others: &[&ActionSequence],
) -> f64 {
    let without = env.normalized_utility(others);
    let mut joint = Vec::with_capacity(others.len() + 1);
    joint.push(own);
    joint.extend_from_slice(others);
    (env.normalized_utility(&joint) - without).clamp(0.0, 1.0)
}

/// Builds a plan from the `k` best leaves of the tree. `prefix` is the
/// already-executed part of the agent's trajectory. The pmf starts as a
/// softmax of leaf values at temperature `tau`; candidates that survive from
/// `previous` keep their relative mass.
pub fn compress_tree<S: Clone>(
    tree: &SearchTree<S>,
    agent: AgentId,
    prefix: &[Action],
    k: usize,
    tau: f64,
    previous: Option<&CompressedPlan>,
    now: u64,
) -> Result<CompressedPlan> {
    let top = tree.top_rollouts(k, now)?;
    let mut candidates = Vec::with_capacity(top.len());
    let mut values = Vec::with_capacity(top.len());
    for r in top {
        let mut actions = prefix.to_vec();
        actions.extend(r.actions);
        candidates.push(ActionSequence::new(agent, actions));
        values.push(r.value);
    }
    let mut pmf = softmax(&values, tau);
    if let Some(prev) = previous {
        let carried: Vec<Option<f64>> = candidates
            .iter()
            .map(|c| {
                prev.candidates
                    .iter()
                    .position(|p| p == c)
                    .map(|i| prev.pmf[i])
            })
            .collect();
        let prev_mass: f64 = carried.iter().flatten().sum();
        let slot_mass: f64 = carried
            .iter()
            .zip(&pmf)
            .filter(|(c, _)| c.is_some())
            .map(|(_, p)| p)
            .sum();
        if prev_mass > 0.0 {
            for (p, c) in pmf.iter_mut().zip(&carried) {
                if let Some(m) = c {
                    *p = m / prev_mass * slot_mass;
                }
            }
        }
        let z: f64 = pmf.iter().sum();
        pmf.iter_mut().for_each(|p| *p /= z);
    }
    Ok(CompressedPlan {
        agent,
        candidates,
        values,
        pmf,
    })
}

/// Re-estimates the pmf from the expected normalized global utility of each
/// candidate against `sample_count` joint draws from the teammates' plans.
/// All candidates are scored against the same draws.
pub fn update_plan_distribution<E: Environment, R: Rng>(
    plan: &CompressedPlan,
    table: &PlanTable,
    env: &E,
    sample_count: usize,
    tau: f64,
    rng: &mut R,
) -> Result<CompressedPlan> {
    if plan.is_empty() {
        return Err(Error::EmptyPlan);
    }
    let estimates = expected_utilities(plan, table, env, sample_count, rng);
    let mut updated = plan.clone();
    updated.pmf = softmax(&estimates, tau);
    Ok(updated)
}

/// Monte Carlo estimate of `E[g(a, others)]` for every candidate `a`.
pub fn expected_utilities<E: Environment, R: Rng>(
    plan: &CompressedPlan,
    table: &PlanTable,
    env: &E,
    sample_count: usize,
    rng: &mut R,
) -> Vec<f64> {
    let samples = sample_count.max(1);
    let mut totals = vec![0.0; plan.len()];
    let mut joint: Vec<&ActionSequence> = Vec::with_capacity(table.len() + 1);
    for _ in 0..samples {
        let others = sample_joint_actions(table, rng);
        for (total, cand) in totals.iter_mut().zip(&plan.candidates) {
            joint.clear();
            joint.push(cand);
            joint.extend_from_slice(&others);
            *total += env.normalized_utility(&joint);
        }
    }
    totals.iter().map(|t| t / samples as f64).collect()
}

/// The candidate with the largest probability; ties go to the higher leaf
/// value, then the lexicographically smaller sequence.
pub fn recommend_plan(plan: &CompressedPlan) -> Result<&ActionSequence> {
    (0..plan.len())
        .max_by(|&a, &b| {
            plan.pmf[a]
                .total_cmp(&plan.pmf[b])
                .then(plan.values[a].total_cmp(&plan.values[b]))
                .then_with(|| plan.candidates[b].actions.cmp(&plan.candidates[a].actions))
        })
        .map(|i| &plan.candidates[i])
        .ok_or(Error::EmptyPlan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{DeceptiveTree, DeceptiveTreeSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plan(agent: usize, seqs: &[&[Action]], values: &[f64], pmf: &[f64]) -> CompressedPlan {
        CompressedPlan {
            agent,
            candidates: seqs
                .iter()
                .map(|s| ActionSequence::new(agent, s.to_vec()))
                .collect(),
            values: values.to_vec(),
            pmf: pmf.to_vec(),
        }
    }

    #[test]
    fn degenerate_pmf_always_draws_its_candidate() {
        let mut t = PlanTable::new();
        t.publish(Arc::new(plan(1, &[&[0, 1]], &[0.5], &[1.0])));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(sample_joint_actions(&t, &mut rng)[0].actions, vec![0, 1]);
        }
    }

    #[test]
    fn empty_table_samples_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_joint_actions(&PlanTable::new(), &mut rng).is_empty());
    }

    #[test]
    fn without_drops_self() {
        let mut t = PlanTable::new();
        t.publish(Arc::new(plan(0, &[&[0]], &[0.5], &[1.0])));
        t.publish(Arc::new(plan(1, &[&[1]], &[0.5], &[1.0])));
        let v = t.without(0);
        assert_eq!(v.len(), 1);
        assert!(v.get(0).is_none());
    }

    #[test]
    fn recommendation_tie_breaks() {
        let p = plan(0, &[&[0], &[1]], &[0.5, 0.5], &[0.7, 0.3]);
        assert_eq!(recommend_plan(&p).unwrap().actions, vec![0]);
        let p = plan(0, &[&[1], &[0]], &[0.9, 0.8], &[0.5, 0.5]);
        assert_eq!(recommend_plan(&p).unwrap().actions, vec![1]);
        let p = plan(0, &[&[1, 2], &[1, 1]], &[0.5, 0.5], &[0.5, 0.5]);
        assert_eq!(recommend_plan(&p).unwrap().actions, vec![1, 1]);
        let empty = plan(0, &[], &[], &[]);
        assert!(matches!(recommend_plan(&empty), Err(Error::EmptyPlan)));
    }

    #[test]
    fn marginal_examples() {
        let env = DeceptiveTree::build(&DeceptiveTreeSpec::standard(10, 2, 2)).unwrap();
        let u = env.utility_bound();
        let top = ActionSequence::new(0, vec![0; 10]);
        let shallow = ActionSequence::new(1, vec![1]);
        assert!((marginal_contribution(&env, &shallow, &[]) - 0.9 / u).abs() < 1e-12);
        assert!((marginal_contribution(&env, &shallow, &[&top]) - 0.9 / u).abs() < 1e-12);
        let dup = ActionSequence::new(0, vec![1]);
        assert_eq!(marginal_contribution(&env, &dup, &[&shallow]), 0.0);
    }

    #[test]
    fn update_softmaxes_estimates() {
        let env = DeceptiveTree::build(&DeceptiveTreeSpec::standard(1, 2, 1)).unwrap();
        // bound is 1; leaves are [0] -> 1 and [1] -> 0
        let p = plan(0, &[&[0], &[1]], &[0.0, 0.0], &[0.5, 0.5]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = update_plan_distribution(&p, &PlanTable::new(), &env, 10, 1.0, &mut rng).unwrap();
        let e = std::f64::consts::E;
        assert!((u.pmf[0] - e / (e + 1.0)).abs() < 1e-12);
        assert!((u.pmf[0] - 0.731).abs() < 1e-3);
    }

    #[test]
    fn single_candidate_update_is_point_mass() {
        let env = DeceptiveTree::build(&DeceptiveTreeSpec::standard(2, 2, 1)).unwrap();
        let p = plan(0, &[&[1]], &[0.3], &[1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let u = update_plan_distribution(&p, &PlanTable::new(), &env, 10, 0.5, &mut rng).unwrap();
        assert_eq!(u.pmf, vec![1.0]);
    }
}
