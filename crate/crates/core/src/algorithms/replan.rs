use std::time::{Duration, Instant};

use super::config::ResolvedConfig;
use super::{derive_seed, plan_episode, EpisodeOptions};
use crate::env::Environment;
use crate::error::Result;
use crate::types::{Action, ActionSequence};

#[derive(Debug, Clone)]
pub struct ReplanResult {
    /// Executed trajectory per agent.
    pub trajectories: Vec<ActionSequence>,
    /// Raw joint utility of the executed trajectories.
    pub utility: f64,
    pub cycles: usize,
    /// Planning iterations consumed per agent.
    pub iterations: usize,
    /// `(cycle, raw utility so far)` after every executed cycle.
    pub progress: Vec<(usize, f64)>,
    pub wallclock: Duration,
}

/// Plan, execute the first action of every agent's recommendation, repeat
/// with fresh trees until no agent has a feasible action left. Each cycle
/// spends `planning_budget` iterations per agent.
///
/// The centralized variant plans once up front and executes the whole plan.
pub fn online_replan_loop<E: Environment>(
    env: &E,
    config: &ResolvedConfig,
    seed: u64,
    parallel: bool,
) -> Result<ReplanResult> {
    let started = Instant::now();
    let n = env.agent_count();
    let mut executed: Vec<Vec<Action>> = vec![Vec::new(); n];
    let mut progress = Vec::new();
    let mut cycles = 0usize;
    let mut iterations = 0usize;

    if config.centralized {
        let opts = EpisodeOptions {
            parallel,
            ..Default::default()
        };
        let result = plan_episode(env, config, seed, &opts)?;
        executed = result.plans.into_iter().map(|s| s.actions).collect();
        cycles = 1;
        iterations = config.planning_budget;
        let refs: Vec<ActionSequence> = executed
            .iter()
            .enumerate()
            .map(|(i, a)| ActionSequence::new(i, a.clone()))
            .collect();
        progress.push((1, env.utility(&refs.iter().collect::<Vec<_>>())));
    } else {
        loop {
            let active: Vec<bool> = (0..n)
                .map(|i| {
                    let (s, _) = env
                        .replay(i, &executed[i])
                        .expect("executed trajectory became infeasible");
                    !env.actions(i, &s).is_empty()
                })
                .collect();
            if !active.iter().any(|a| *a) {
                break;
            }
            let opts = EpisodeOptions {
                snapshot_every: None,
                parallel,
                prefixes: Some(executed.clone()),
            };
            let result = plan_episode(env, config, derive_seed(seed, cycles as u64), &opts)?;
            for (i, plan) in result.plans.iter().enumerate() {
                if active[i] {
                    let k = executed[i].len();
                    let next = *plan
                        .actions
                        .get(k)
                        .expect("recommendation does not extend the executed prefix");
                    executed[i].push(next);
                }
            }
            cycles += 1;
            iterations += config.planning_budget;
            let seqs: Vec<ActionSequence> = executed
                .iter()
                .enumerate()
                .map(|(i, a)| ActionSequence::new(i, a.clone()))
                .collect();
            progress.push((cycles, env.utility(&seqs.iter().collect::<Vec<_>>())));
        }
    }

    let trajectories: Vec<ActionSequence> = executed
        .into_iter()
        .enumerate()
        .map(|(i, a)| ActionSequence::new(i, a))
        .collect();
    let utility = env.utility(&trajectories.iter().collect::<Vec<_>>());
    Ok(ReplanResult {
        trajectories,
        utility,
        cycles,
        iterations,
        progress,
        wallclock: started.elapsed(),
    })
}
