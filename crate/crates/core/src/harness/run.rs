use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::report::{Reference, Report, TrialRecord};
use super::spec::{EnvironmentSpec, ExperimentSpec, Mode};
use crate::algorithms::{
    apply_variant_schedules, derive_seed, online_replan_loop, plan_episode, EpisodeOptions,
    PlannerConfig, ResolvedConfig,
};
use crate::env::{
    as_refs, synthesize_coverage_instance, DeceptiveTree, DeceptiveTreeSpec, Environment,
    FrozenLake, FrozenLakeMap, GraphCoverage, GraphCoverageSpec,
};
use crate::error::{Error, Result};
use crate::oracle::{brute_force_optimal_joint, OptimalJoint};
use crate::types::ActionSequence;

const MAP_ATTEMPTS: usize = 10_000;

/// Concrete environment instances built from a descriptor.
pub enum BuiltEnvironment {
    Dchain(DeceptiveTree),
    FrozenLake(Vec<FrozenLake>),
    Coverage(Vec<GraphCoverage>),
}

impl BuiltEnvironment {
    pub fn build(spec: &EnvironmentSpec) -> Result<Self> {
        Ok(match spec {
            EnvironmentSpec::Dchain {
                depth,
                branching,
                agents,
                variant,
            } => {
                let spec = DeceptiveTreeSpec {
                    depth: *depth,
                    branching: *branching,
                    agents: *agents,
                    variant: (*variant).into(),
                };
                Self::Dchain(DeceptiveTree::build(&spec)?)
            }
            EnvironmentSpec::FrozenLake {
                map_file,
                map,
                width,
                height,
                hole_probability,
                goals,
                agents,
                step_budget,
                instances,
                instance_seed,
            } => {
                let maps = if let Some(path) = map_file {
                    vec![std::fs::read_to_string(path)?.parse::<FrozenLakeMap>()?]
                } else if let Some(text) = map {
                    vec![text.parse::<FrozenLakeMap>()?]
                } else {
                    (0..(*instances).max(1))
                        .map(|i| {
                            let mut rng =
                                ChaCha8Rng::seed_from_u64(derive_seed(*instance_seed, i as u64));
                            FrozenLakeMap::generate(
                                *width,
                                *height,
                                *hole_probability,
                                *goals,
                                MAP_ATTEMPTS,
                                &mut rng,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                Self::FrozenLake(
                    maps.into_iter()
                        .map(|m| FrozenLake::new(m, *agents, *step_budget))
                        .collect(),
                )
            }
            EnvironmentSpec::Coverage {
                instance_file,
                vertices,
                targets,
                radius,
                budget,
                agents,
                instances,
                instance_seed,
            } => {
                let specs = if let Some(path) = instance_file {
                    let spec: GraphCoverageSpec =
                        serde_json::from_str(&std::fs::read_to_string(path)?)?;
                    vec![spec]
                } else {
                    (0..(*instances).max(1))
                        .map(|i| {
                            let mut rng =
                                ChaCha8Rng::seed_from_u64(derive_seed(*instance_seed, i as u64));
                            synthesize_coverage_instance(
                                *vertices, *targets, *radius, *budget, &mut rng,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?
                };
                Self::Coverage(
                    specs
                        .into_iter()
                        .map(|s| GraphCoverage::build(s, *agents))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        })
    }
}

/// Evaluation of one joint plan.
struct Metrics {
    simple_regret: Option<f64>,
    joint_score: f64,
    pr1: u8,
    pr2: u8,
}

trait Evaluate: Environment {
    fn metrics(&self, plans: &[ActionSequence], reference: Option<f64>) -> Metrics {
        let refs = as_refs(plans);
        Metrics {
            simple_regret: reference.map(|mu| (mu - self.normalized_utility(&refs)).max(0.0)),
            joint_score: self.utility(&refs),
            pr1: 0,
            pr2: 0,
        }
    }
}

impl Evaluate for DeceptiveTree {}
impl Evaluate for GraphCoverage {}

impl Evaluate for FrozenLake {
    fn metrics(&self, plans: &[ActionSequence], _reference: Option<f64>) -> Metrics {
        let refs = as_refs(plans);
        let reached = self.goals_reached(&refs);
        Metrics {
            simple_regret: None,
            joint_score: self.utility(&refs),
            pr1: (reached >= 1) as u8,
            pr2: (reached >= 2.min(self.goal_count())) as u8,
        }
    }
}

struct Trial<'a> {
    env_id: &'a str,
    algorithm: String,
    config: ResolvedConfig,
    seed: u64,
    cadence: usize,
    mode: Mode,
}

fn run_trial<E: Evaluate>(
    env: &E,
    trial: &Trial<'_>,
    reference: Option<f64>,
) -> Result<Vec<TrialRecord>> {
    let started = Instant::now();
    let mut points: Vec<(usize, Metrics)> = Vec::new();
    match trial.mode {
        Mode::Offline => {
            let options = EpisodeOptions {
                snapshot_every: Some(trial.cadence),
                parallel: false,
                prefixes: None,
            };
            let result = plan_episode(env, &trial.config, trial.seed, &options)?;
            for snap in &result.trace {
                points.push((snap.iteration, env.metrics(&snap.plans, reference)));
            }
            if points.last().map(|p| p.0) != Some(result.iterations) {
                points.push((result.iterations, env.metrics(&result.plans, reference)));
            }
        }
        Mode::Online => {
            let result = online_replan_loop(env, &trial.config, trial.seed, false)?;
            // Executed prefixes after every cycle, reconstructed from the final trajectories.
            let per_cycle = trial.config.planning_budget;
            let n = result.progress.len();
            for (i, &(cycle, _)) in result.progress.iter().enumerate() {
                let iteration = cycle * per_cycle;
                if !iteration.is_multiple_of(trial.cadence) && i + 1 != n {
                    continue;
                }
                let plans: Vec<ActionSequence> = result
                    .trajectories
                    .iter()
                    .map(|t| {
                        let k = if trial.config.centralized {
                            t.actions.len()
                        } else {
                            cycle.min(t.actions.len())
                        };
                        ActionSequence::new(t.agent, t.actions[..k].to_vec())
                    })
                    .collect();
                points.push((iteration, env.metrics(&plans, reference)));
            }
        }
    }
    let wallclock_ms = started.elapsed().as_millis() as u64;
    Ok(points
        .into_iter()
        .map(|(iteration, m)| TrialRecord {
            env_id: trial.env_id.to_string(),
            algorithm: trial.algorithm.clone(),
            seed: trial.seed,
            iteration,
            simple_regret: m.simple_regret,
            joint_score: m.joint_score,
            pr1: m.pr1,
            pr2: m.pr2,
            wallclock_ms,
        })
        .collect())
}

/// Regret reference for the D-chain: exact when enumerable, otherwise the
/// declared utility bound (the top-N distinct leaves, which is attainable).
fn dchain_reference(
    env: &DeceptiveTree,
    spec: &ExperimentSpec,
) -> Result<(Option<OptimalJoint>, Reference)> {
    match brute_force_optimal_joint(env, spec.oracle_cap as u128) {
        Ok(opt) => Ok((Some(opt), Reference::Exact)),
        Err(e @ Error::EnumerationCap { .. }) => {
            if spec.require_exact_regret {
                Err(e)
            } else {
                Ok((None, Reference::LowerBound))
            }
        }
        Err(e) => Err(e),
    }
}

/// Resolves the planners of a spec, rejecting invalid hyperparameters early.
pub fn resolve_planners(planners: &[PlannerConfig]) -> Result<Vec<(String, ResolvedConfig)>> {
    planners
        .iter()
        .map(|p| Ok((p.label(), apply_variant_schedules(p)?)))
        .collect()
}

/// Runs every (planner, seed) pair, on a pool of `jobs` threads (`0` uses
/// rayon's default). Output is sorted by planner order, seed order and
/// iteration, so it does not depend on scheduling.
pub fn run_experiment(spec: &ExperimentSpec, jobs: usize) -> Result<Report> {
    spec.validate()?;
    let built = BuiltEnvironment::build(&spec.environment)?;
    let planners = resolve_planners(&spec.planners)?;
    let seeds = spec.seed_list();

    let mut reference = Reference::None;
    let mut mu_star = None;
    if let BuiltEnvironment::Dchain(env) = &built {
        let (opt, r) = dchain_reference(env, spec)?;
        reference = r;
        mu_star = Some(opt.map_or(1.0, |o| o.value));
    }

    let jobs_list: Vec<(usize, usize)> = (0..planners.len())
        .flat_map(|p| (0..seeds.len()).map(move |s| (p, s)))
        .collect();
    let task = |&(p, s): &(usize, usize)| -> Result<((usize, usize), Vec<TrialRecord>)> {
        let (label, config) = &planners[p];
        let cadence = spec.cadence.unwrap_or(config.planning_budget).max(1);
        let trial = Trial {
            env_id: &spec.env_id,
            algorithm: label.clone(),
            config: config.clone(),
            seed: seeds[s],
            cadence,
            mode: spec.mode,
        };
        let rows = match &built {
            BuiltEnvironment::Dchain(env) => run_trial(env, &trial, mu_star)?,
            BuiltEnvironment::FrozenLake(maps) => run_trial(&maps[s % maps.len()], &trial, None)?,
            BuiltEnvironment::Coverage(graphs) => {
                run_trial(&graphs[s % graphs.len()], &trial, None)?
            }
        };
        Ok(((p, s), rows))
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let mut results: Vec<((usize, usize), Vec<TrialRecord>)> =
        pool.install(|| jobs_list.par_iter().map(task).collect::<Result<Vec<_>>>())?;
    results.sort_by_key(|(k, _)| *k);
    if spec.mode == Mode::Online {
        pad_finished_trials(&mut results, spec, &planners);
    }
    let records = results.into_iter().flat_map(|(_, rows)| rows).collect();
    Ok(Report::new(records, reference))
}

/// Online trials stop after different numbers of cycles. A finished
/// trial's executed plan no longer changes, so its last row is repeated at
/// the remaining cadence points up to the planner's longest trial; this
/// keeps every summary point averaged over all seeds.
fn pad_finished_trials(
    results: &mut [((usize, usize), Vec<TrialRecord>)],
    spec: &ExperimentSpec,
    planners: &[(String, ResolvedConfig)],
) {
    for (p, (_, config)) in planners.iter().enumerate() {
        let cadence = spec.cadence.unwrap_or(config.planning_budget).max(1);
        let horizon = results
            .iter()
            .filter(|((q, _), _)| *q == p)
            .filter_map(|(_, rows)| rows.last().map(|r| r.iteration))
            .max()
            .unwrap_or(0);
        for ((q, _), rows) in results.iter_mut() {
            if *q != p {
                continue;
            }
            let Some(last) = rows.last().cloned() else {
                continue;
            };
            let mut it = (last.iteration / cadence + 1) * cadence;
            while it < horizon {
                rows.push(TrialRecord {
                    iteration: it,
                    ..last.clone()
                });
                it += cadence;
            }
            if last.iteration < horizon {
                rows.push(TrialRecord {
                    iteration: horizon,
                    ..last
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::Variant;

    fn dchain(depth: usize) -> EnvironmentSpec {
        EnvironmentSpec::Dchain {
            depth,
            branching: 2,
            agents: 2,
            variant: crate::env::dchain::SimpleVariant::Standard,
        }
    }

    #[test]
    fn cadence_equal_to_budget_gives_one_row() {
        let spec = ExperimentSpec::new(
            "d3",
            dchain(3),
            vec![PlannerConfig::new(Variant::Cb).with_budget(50)],
        );
        let report = run_experiment(&spec, 1).unwrap();
        assert_eq!(report.records.len(), 1);
        assert_eq!(report.records[0].iteration, 50);
        assert_eq!(report.reference, Reference::Exact);
    }

    #[test]
    fn rows_per_cadence_point() {
        let mut spec = ExperimentSpec::new(
            "d4",
            dchain(4),
            vec![PlannerConfig::new(Variant::Dec).with_budget(1000)],
        );
        spec.cadence = Some(100);
        spec.set_trial_count(3);
        let report = run_experiment(&spec, 2).unwrap();
        assert_eq!(report.records.len(), 30);
        let iters: Vec<usize> = report
            .records
            .iter()
            .take(10)
            .map(|r| r.iteration)
            .collect();
        assert_eq!(iters, (1..=10).map(|i| i * 100).collect::<Vec<_>>());
        assert_eq!(report.summary.len(), 10);
    }

    #[test]
    fn lower_bound_reference_beyond_cap() {
        let mut spec = ExperimentSpec::new(
            "d8",
            dchain(8),
            vec![PlannerConfig::new(Variant::Cb).with_budget(20)],
        );
        spec.oracle_cap = 10;
        let report = run_experiment(&spec, 1).unwrap();
        assert_eq!(report.reference, Reference::LowerBound);
        assert!(report.records[0].simple_regret.is_some());
        spec.require_exact_regret = true;
        assert!(matches!(
            run_experiment(&spec, 1),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn frozen_lake_flags() {
        let map = "SFFG\nFHHF\nFFFG\n".to_string();
        let env = EnvironmentSpec::FrozenLake {
            map_file: None,
            map: Some(map),
            width: 4,
            height: 3,
            hole_probability: 0.2,
            goals: 2,
            agents: 2,
            step_budget: 10,
            instances: 1,
            instance_seed: 0,
        };
        let spec = ExperimentSpec::new(
            "tiny",
            env,
            vec![PlannerConfig::frozen_lake_preset(Variant::Cb).with_budget(300)],
        );
        let report = run_experiment(&spec, 1).unwrap();
        let r = &report.records[0];
        assert!(r.simple_regret.is_none());
        assert!(r.pr2 <= r.pr1);
        assert_eq!((r.pr1, r.pr2), (1, 1), "{r:?}");
    }

    #[test]
    fn online_coverage_rows() {
        let env = EnvironmentSpec::Coverage {
            instance_file: None,
            vertices: 20,
            targets: 6,
            radius: 0.05,
            budget: 1.0,
            agents: 2,
            instances: 1,
            instance_seed: 3,
        };
        let mut spec = ExperimentSpec::new(
            "cov",
            env,
            vec![PlannerConfig::coverage_preset(Variant::Ne).with_budget(20)],
        );
        spec.mode = Mode::Online;
        let report = run_experiment(&spec, 1).unwrap();
        assert!(!report.records.is_empty());
        let scores: Vec<f64> = report.records.iter().map(|r| r.joint_score).collect();
        assert!(scores.windows(2).all(|w| w[0] <= w[1] + 1e-12));

        spec.set_trial_count(4);
        let report = run_experiment(&spec, 1).unwrap();
        let last = report.summary.last().unwrap();
        assert_eq!(last.trials, 4);
        assert!(report.summary.iter().all(|s| s.trials == 4));
    }
}
