use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ResolvedConfig, RewardMode};
use super::{agent_rng, prefixes_for, EpisodeOptions, EpisodeResult, Snapshot};
use crate::coordination::{
    compress_tree, marginal_contribution, recommend_plan, sample_joint_actions,
    update_plan_distribution, CompressedPlan, PlanTable,
};
use crate::env::{AgentDomain, Environment};
use crate::error::{Error, Result};
use crate::search::SearchTree;
use crate::types::{Action, ActionSequence, AgentId};

/// Uniform-random playout until no action remains.
pub(crate) fn random_rollout<D, R>(domain: &D, start: &D::State, rng: &mut R) -> Vec<Action>
where
    D: crate::search::SearchDomain,
    R: Rng,
{
    let mut state = start.clone();
    let mut actions = Vec::new();
    loop {
        let options = domain.actions(&state);
        if options.is_empty() {
            return actions;
        }
        let a = options[rng.gen_range(0..options.len())];
        state = domain.step(&state, a);
        actions.push(a);
    }
}

struct AgentPlanner<'e, E: Environment> {
    id: AgentId,
    env: &'e E,
    prefix: Vec<Action>,
    tree: SearchTree<E::State>,
    rng: ChaCha8Rng,
    clock: u64,
    plan: Option<Arc<CompressedPlan>>,
    /// No feasible action left: the agent only publishes its prefix.
    idle: bool,
}

impl<'e, E: Environment> AgentPlanner<'e, E> {
    fn new(env: &'e E, id: AgentId, prefix: Vec<Action>, gamma: f64, seed: u64) -> Result<Self> {
        let (start, _) = env.replay(id, &prefix).ok_or(Error::InfeasibleStart(id))?;
        let idle = env.actions(id, &start).is_empty();
        if idle && prefix.is_empty() {
            return Err(Error::InfeasibleStart(id));
        }
        let domain = AgentDomain::new(env, id);
        let tree = SearchTree::new(&domain, start, gamma);
        let plan = idle.then(|| {
            Arc::new(CompressedPlan::single(
                ActionSequence::new(id, prefix.clone()),
                0.0,
            ))
        });
        Ok(Self {
            id,
            env,
            prefix,
            tree,
            rng: agent_rng(seed, id),
            clock: 0,
            plan,
            idle,
        })
    }

    fn iterate(&mut self, config: &ResolvedConfig, view: &PlanTable) -> Result<()> {
        let domain = AgentDomain::new(self.env, self.id);
        let descent =
            self.tree
                .select_and_expand(&domain, &config.selection, &mut self.rng, self.clock)?;
        let leaf_state = self.tree.node(descent.leaf).state.clone();
        let completion = random_rollout(&domain, &leaf_state, &mut self.rng);

        let mut actions = self.prefix.clone();
        actions.extend(self.tree.path_actions(descent.leaf));
        actions.extend_from_slice(&completion);
        self.tree.set_completion(descent.leaf, completion);
        let own = ActionSequence::new(self.id, actions);

        let others = sample_joint_actions(view, &mut self.rng);
        let reward = match config.reward {
            RewardMode::Marginal => marginal_contribution(self.env, &own, &others),
            RewardMode::Global => {
                let mut joint = others.clone();
                joint.push(&own);
                self.env.normalized_utility(&joint)
            }
            RewardMode::Own => self.env.normalized_utility(&[&own]),
        };
        let entropy = if config.track_entropy {
            config.boltzmann()
        } else {
            None
        };
        self.tree
            .backpropagate(&descent.path, reward, entropy, self.clock)?;
        self.clock += 1;
        Ok(())
    }

    fn run_round(
        &mut self,
        iterations: usize,
        config: &ResolvedConfig,
        table: &PlanTable,
    ) -> Result<()> {
        if self.idle {
            return Ok(());
        }
        let view = table.without(self.id);
        for _ in 0..iterations {
            self.iterate(config, &view)?;
        }
        Ok(())
    }

    fn exchange(
        &mut self,
        compress: bool,
        round: usize,
        config: &ResolvedConfig,
        table: &PlanTable,
    ) -> Result<()> {
        if self.idle {
            return Ok(());
        }
        let tau = config.plan_temperature_at(round);
        if compress || self.plan.is_none() {
            let plan = compress_tree(
                &self.tree,
                self.id,
                &self.prefix,
                config.compression_size,
                tau,
                self.plan.as_deref(),
                self.clock,
            )?;
            self.plan = Some(Arc::new(plan));
        }
        let view = table.without(self.id);
        let current = self.plan.as_ref().unwrap();
        let updated = update_plan_distribution(
            current,
            &view,
            self.env,
            config.sample_count,
            tau,
            &mut self.rng,
        )?;
        self.plan = Some(Arc::new(updated));
        Ok(())
    }

    fn recommendation(&self) -> Result<ActionSequence> {
        match &self.plan {
            Some(plan) => recommend_plan(plan).cloned(),
            None => {
                let best = self.tree.top_rollouts(1, self.clock)?;
                let mut actions = self.prefix.clone();
                actions.extend_from_slice(&best[0].actions);
                Ok(ActionSequence::new(self.id, actions))
            }
        }
    }
}

fn for_each_agent<'e, E, F>(agents: &mut [AgentPlanner<'e, E>], parallel: bool, f: F) -> Result<()>
where
    E: Environment,
    F: Fn(&mut AgentPlanner<'e, E>) -> Result<()> + Sync + Send,
{
    if parallel {
        agents.par_iter_mut().map(f).collect::<Result<Vec<()>>>()?;
    } else {
        for a in agents.iter_mut() {
            f(a)?;
        }
    }
    Ok(())
}

/// Runs all agents in lockstep exchange rounds for `planning_budget`
/// iterations each and returns every agent's recommended sequence.
///
/// Each round, every agent performs `inner_iterations` select/expand,
/// rollout, evaluate and backup steps against the plans published in the
/// previous round; then compresses its tree (whenever its clock is a multiple
/// of the communication period), re-estimates its pmf and publishes.
pub fn plan_decentralized_episode<E: Environment>(
    env: &E,
    config: &ResolvedConfig,
    seed: u64,
    options: &EpisodeOptions,
) -> Result<EpisodeResult> {
    let started = Instant::now();
    let prefixes = prefixes_for(env, options);
    let mut agents = (0..env.agent_count())
        .map(|id| AgentPlanner::new(env, id, prefixes[id].clone(), config.gamma, seed))
        .collect::<Result<Vec<_>>>()?;

    let mut table = PlanTable::new();
    if config.communicate {
        for a in agents.iter().filter(|a| a.idle) {
            table.publish(a.plan.clone().unwrap());
        }
    }

    let budget = config.planning_budget;
    let mut done = 0usize;
    let mut round = 0usize;
    let mut trace = Vec::new();
    let mut next_snapshot = options.snapshot_every.filter(|&s| s > 0);

    while done < budget {
        let n = config.inner_iterations.min(budget - done);
        for_each_agent(&mut agents, options.parallel, |a| {
            a.run_round(n, config, &table)
        })?;
        done += n;
        let compress = done.is_multiple_of(config.communication_period) || done == budget;
        for_each_agent(&mut agents, options.parallel, |a| {
            a.exchange(compress, round, config, &table)
        })?;
        if config.communicate {
            let mut next = PlanTable::new();
            for a in &agents {
                next.publish(a.plan.clone().unwrap());
            }
            table = next;
        }
        round += 1;

        if let Some(every) = options.snapshot_every.filter(|&s| s > 0) {
            let due = next_snapshot.is_some_and(|s| done >= s);
            if due || done == budget {
                let plans = agents
                    .iter()
                    .map(|a| a.recommendation())
                    .collect::<Result<Vec<_>>>()?;
                trace.push(Snapshot {
                    iteration: done,
                    plans,
                });
                while next_snapshot.is_some_and(|s| s <= done) {
                    next_snapshot = next_snapshot.map(|s| s + every);
                }
            }
        }
    }

    let plans = agents
        .iter()
        .map(|a| a.recommendation())
        .collect::<Result<Vec<_>>>()?;
    Ok(EpisodeResult {
        plans,
        trace,
        iterations: budget,
        wallclock: started.elapsed(),
    })
}
