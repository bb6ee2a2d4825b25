use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{Report, SummaryRow};
use super::run::run_experiment;
use super::spec::{EnvironmentSpec, ExperimentSpec};
use crate::error::{Error, Result};

/// Parameter name → candidate values. Keys are planner configuration fields.
pub type Grid = BTreeMap<String, Vec<f64>>;

pub fn parse_grid(text: &str) -> Result<Grid> {
    #[derive(Deserialize)]
    struct Wrapped {
        grid: Grid,
    }
    // accept both a bare table and a `[grid]` section
    if let Ok(w) = toml::from_str::<Wrapped>(text) {
        return Ok(w.grid);
    }
    toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn load_grid(path: &Path) -> Result<Grid> {
    parse_grid(&std::fs::read_to_string(path)?)
}

/// Every combination of grid values, last key varying fastest.
pub fn grid_points(grid: &Grid) -> Result<Vec<BTreeMap<String, f64>>> {
    let mut points = vec![BTreeMap::new()];
    for (key, values) in grid {
        if values.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "grid dimension {key:?} has no values"
            )));
        }
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.insert(key.clone(), *v);
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

/// One sub-experiment of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub params: BTreeMap<String, f64>,
    /// Final-iteration summaries, one per planner.
    pub finals: Vec<SummaryRow>,
    pub report: Report,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCombination {
    pub rank: usize,
    pub algorithm: String,
    pub params: BTreeMap<String, f64>,
    /// Mean simple regret (D-chain, lower is better) or mean joint score.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub ranking: Vec<RankedCombination>,
    pub entries: Vec<SweepEntry>,
}

impl SweepReport {
    /// All records with the parameter setting appended to the algorithm name.
    pub fn flattened(&self) -> Report {
        let mut records = Vec::new();
        for e in &self.entries {
            let tag: Vec<String> = e.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
            for r in &e.report.records {
                let mut r = r.clone();
                r.algorithm = format!("{}[{}]", r.algorithm, tag.join(";"));
                records.push(r);
            }
        }
        let reference = self
            .entries
            .first()
            .map_or(super::report::Reference::None, |e| e.report.reference);
        Report::new(records, reference)
    }
}

/// Runs `base` once per grid combination, with the combination applied to
/// every planner, and ranks (planner, combination) pairs on final-iteration
/// performance.
pub fn sweep_grid(base: &ExperimentSpec, grid: &Grid, jobs: usize) -> Result<SweepReport> {
    let by_regret = matches!(base.environment, EnvironmentSpec::Dchain { .. });
    let mut entries = Vec::new();
    for params in grid_points(grid)? {
        let mut spec = base.clone();
        for planner in &mut spec.planners {
            for (k, v) in &params {
                planner.set_param(k, *v)?;
            }
        }
        let report = run_experiment(&spec, jobs)?;
        let mut finals: BTreeMap<String, SummaryRow> = BTreeMap::new();
        for row in &report.summary {
            let slot = finals
                .entry(row.algorithm.clone())
                .or_insert_with(|| row.clone());
            if row.iteration >= slot.iteration {
                *slot = row.clone();
            }
        }
        let order: Vec<String> = spec.planners.iter().map(|p| p.label()).collect();
        let mut finals: Vec<SummaryRow> = finals.into_values().collect();
        finals.sort_by_key(|r| order.iter().position(|l| *l == r.algorithm));
        entries.push(SweepEntry {
            params,
            finals,
            report,
        });
    }

    let mut ranking: Vec<RankedCombination> = entries
        .iter()
        .flat_map(|e| {
            e.finals.iter().map(move |row| RankedCombination {
                rank: 0,
                algorithm: row.algorithm.clone(),
                params: e.params.clone(),
                score: match (by_regret, row.simple_regret) {
                    (true, Some(r)) => r.mean,
                    _ => row.joint_score.mean,
                },
            })
        })
        .collect();
    // stable: ties keep grid order
    if by_regret {
        ranking.sort_by(|a, b| a.score.total_cmp(&b.score));
    } else {
        ranking.sort_by(|a, b| b.score.total_cmp(&a.score));
    }
    for (i, r) in ranking.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    Ok(SweepReport { ranking, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::{PlannerConfig, Variant};
    use crate::env::dchain::SimpleVariant;

    fn base() -> ExperimentSpec {
        let env = EnvironmentSpec::Dchain {
            depth: 3,
            branching: 2,
            agents: 2,
            variant: SimpleVariant::Standard,
        };
        ExperimentSpec::new(
            "d3",
            env,
            vec![PlannerConfig::new(Variant::Cb).with_budget(40)],
        )
    }

    #[test]
    fn cartesian_product() {
        let grid = parse_grid("epsilon = [0.5, 1.0]\ngamma = [0.7, 0.9]\n").unwrap();
        let points = grid_points(&grid).unwrap();
        assert_eq!(points.len(), 4);
        assert_eq!(points[1]["epsilon"], 0.5);
        assert_eq!(points[1]["gamma"], 0.9);
        let sweep = sweep_grid(&base(), &grid, 1).unwrap();
        assert_eq!(sweep.entries.len(), 4);
        assert_eq!(sweep.ranking.len(), 4);
        assert!(sweep.ranking.windows(2).all(|w| w[0].score <= w[1].score));
    }

    #[test]
    fn full_grid_size() {
        let grid = parse_grid(
            "[grid]\nepsilon = [0.1, 0.5, 1, 10]\ngamma = [0.6, 0.7, 0.8, 0.9]\nalpha_init = [0.01, 0.1, 0.5, 1]\n",
        )
        .unwrap();
        assert_eq!(grid_points(&grid).unwrap().len(), 64);
    }

    #[test]
    fn empty_dimension_rejected() {
        let grid = parse_grid("epsilon = []\n").unwrap();
        assert!(sweep_grid(&base(), &grid, 1).is_err());
    }

    #[test]
    fn single_point_matches_plain_run() {
        let grid = parse_grid("epsilon = [0.5]\n").unwrap();
        let sweep = sweep_grid(&base(), &grid, 1).unwrap();
        let plain = run_experiment(&base(), 1).unwrap();
        let strip = |r: &Report| {
            r.records
                .iter()
                .map(|x| (x.seed, x.iteration, x.simple_regret, x.joint_score))
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&sweep.entries[0].report), strip(&plain));
    }
}
