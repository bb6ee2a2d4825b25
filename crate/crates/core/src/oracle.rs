//! Ground truth for small instances: exhaustive joint optimum, simple regret,
//! and direct-summation discounted statistics.

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::types::{Action, ActionSequence};

/// Default bound on the number of enumerated joint profiles.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalJoint {
    /// Normalized optimal utility.
    pub value: f64,
    /// Raw optimal utility.
    pub raw_value: f64,
    /// Lexicographically first maximizing profile, one sequence per agent.
    pub witness: Vec<ActionSequence>,
}

/// All complete (terminal) action sequences of one agent, in lexicographic
/// order. Fails once more than `cap` have been found.
pub fn enumerate_sequences<E: Environment>(
    env: &E,
    agent: usize,
    cap: u128,
) -> Result<Vec<Vec<Action>>> {
    fn walk<E: Environment>(
        env: &E,
        agent: usize,
        state: &E::State,
        path: &mut Vec<Action>,
        out: &mut Vec<Vec<Action>>,
        cap: u128,
    ) -> Result<()> {
        let actions = env.actions(agent, state);
        if actions.is_empty() {
            if out.len() as u128 >= cap {
                return Err(Error::EnumerationCap { size: cap + 1, cap });
            }
            out.push(path.clone());
            return Ok(());
        }
        for a in actions {
            path.push(a);
            let next = env.step(agent, state, a);
            walk(env, agent, &next, path, out, cap)?;
            path.pop();
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(
        env,
        agent,
        &env.start_state(agent),
        &mut Vec::new(),
        &mut out,
        cap,
    )?;
    Ok(out)
}

/// Exhaustive maximization of the joint utility over the product of the
/// agents' complete sequences.
pub fn brute_force_optimal_joint<E: Environment>(env: &E, cap: u128) -> Result<OptimalJoint> {
    let n = env.agent_count();
    let mut per_agent = Vec::with_capacity(n);
    let mut size: u128 = 1;
    for agent in 0..n {
        let seqs = enumerate_sequences(env, agent, cap)?;
        size = size.saturating_mul(seqs.len() as u128);
        if size > cap {
            return Err(Error::EnumerationCap { size, cap });
        }
        per_agent.push(seqs);
    }

    let mut index = vec![0usize; n];
    let mut best_raw = f64::NEG_INFINITY;
    let mut best = index.clone();
    let mut profile: Vec<ActionSequence> = (0..n).map(ActionSequence::empty).collect();
    loop {
        for (agent, &i) in index.iter().enumerate() {
            profile[agent].actions.clone_from(&per_agent[agent][i]);
        }
        let refs: Vec<&ActionSequence> = profile.iter().collect();
        let g = env.utility(&refs);
        if g > best_raw {
            best_raw = g;
            best.clone_from(&index);
        }
        // odometer increment, last agent fastest
        let mut k = n;
        loop {
            if k == 0 {
                let witness = best
                    .iter()
                    .enumerate()
                    .map(|(a, &i)| ActionSequence::new(a, per_agent[a][i].clone()))
                    .collect();
                return Ok(OptimalJoint {
                    value: (best_raw / env.utility_bound()).clamp(0.0, 1.0),
                    raw_value: best_raw,
                    witness,
                });
            }
            k -= 1;
            index[k] += 1;
            if index[k] < per_agent[k].len() {
                break;
            }
            index[k] = 0;
        }
    }
}

/// `mu* - g(recommended)` on normalized utilities, floored at zero.
pub fn simple_regret_of<E: Environment>(
    env: &E,
    recommended: &[ActionSequence],
    optimal: &OptimalJoint,
) -> f64 {
    let refs: Vec<&ActionSequence> = recommended.iter().collect();
    (optimal.value - env.normalized_utility(&refs)).max(0.0)
}

/// Same gap on raw utilities.
pub fn raw_regret_of<E: Environment>(
    env: &E,
    recommended: &[ActionSequence],
    optimal: &OptimalJoint,
) -> f64 {
    let refs: Vec<&ActionSequence> = recommended.iter().collect();
    (optimal.raw_value - env.utility(&refs)).max(0.0)
}

/// Reference discounted count and value by direct summation over a visit
/// trace of `(iteration, reward)` events.
pub fn direct_discount_trace(events: &[(u64, f64)], gamma: f64, read_at: u64) -> (f64, f64) {
    let mut count = 0.0;
    let mut mass = 0.0;
    for &(t, r) in events {
        let w = gamma.powf((read_at - t) as f64);
        count += w;
        mass += w * r;
    }
    let value = if count > 0.0 { mass / count } else { 0.0 };
    (count, value)
}
