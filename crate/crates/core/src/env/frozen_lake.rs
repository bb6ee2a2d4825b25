//! Multi-goal Frozen Lake with deterministic moves.
//!
//! Agents start in the top-left cell and move until they reach a goal, fall
//! into a hole, or exhaust their step budget. A goal reached at step `t`
//! credits `0.99^t`; each goal is credited once, at its earliest arrival.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::Environment;
use crate::error::{Error, Result};
use crate::types::{Action, ActionSequence, AgentId};

pub const STEP_DECAY: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Start,
    Frozen,
    Hole,
    Goal,
}

impl Cell {
    fn symbol(self) -> char {
        match self {
            Cell::Start => 'S',
            Cell::Frozen => 'F',
            Cell::Hole => 'H',
            Cell::Goal => 'G',
        }
    }
}

/// Moves in the usual gym ordering.
pub const LEFT: Action = 0;
pub const DOWN: Action = 1;
pub const RIGHT: Action = 2;
pub const UP: Action = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenLakeMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
}

impl FrozenLakeMap {
    pub fn new(width: usize, height: usize, cells: Vec<Cell>) -> Result<Self> {
        if width == 0 || height == 0 || cells.len() != width * height {
            return Err(Error::Parse(
                "grid dimensions do not match cell count".into(),
            ));
        }
        if cells[0] != Cell::Start || cells.iter().filter(|c| **c == Cell::Start).count() != 1 {
            return Err(Error::Parse(
                "map needs exactly one start, in the top-left cell".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            cells,
        })
    }

    /// Random map: each non-start, non-goal cell is a hole with probability
    /// `hole_probability`; goals are placed uniformly among the other cells.
    /// Regenerates until every goal is reachable from the start.
    pub fn generate<R: Rng>(
        width: usize,
        height: usize,
        hole_probability: f64,
        goal_count: usize,
        max_attempts: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&hole_probability) {
            return Err(Error::InvalidConfig(format!(
                "hole probability {hole_probability} not in [0, 1)"
            )));
        }
        let n = width * height;
        if goal_count == 0 || goal_count + 1 > n {
            return Err(Error::InvalidConfig(format!(
                "cannot place {goal_count} goals on a {width}x{height} grid"
            )));
        }
        for _ in 0..max_attempts {
            let mut cells = vec![Cell::Frozen; n];
            cells[0] = Cell::Start;
            let mut placed = 0;
            while placed < goal_count {
                let i = rng.gen_range(1..n);
                if cells[i] == Cell::Frozen {
                    cells[i] = Cell::Goal;
                    placed += 1;
                }
            }
            for c in cells.iter_mut().skip(1) {
                if *c == Cell::Frozen && rng.gen::<f64>() < hole_probability {
                    *c = Cell::Hole;
                }
            }
            let map = Self {
                width,
                height,
                cells,
            };
            if map.all_goals_reachable() {
                return Ok(map);
            }
        }
        Err(Error::MapGeneration(max_attempts))
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn cell(&self, index: usize) -> Cell {
        self.cells[index]
    }

    pub fn goals(&self) -> Vec<usize> {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, c)| **c == Cell::Goal)
            .map(|(i, _)| i)
            .collect()
    }

    /// Neighbour reached by `action`, or `None` when it would leave the grid.
    pub fn neighbour(&self, index: usize, action: Action) -> Option<usize> {
        let (r, c) = (index / self.width, index % self.width);
        match action {
            LEFT if c > 0 => Some(index - 1),
            DOWN if r + 1 < self.height => Some(index + self.width),
            RIGHT if c + 1 < self.width => Some(index + 1),
            UP if r > 0 => Some(index - self.width),
            _ => None,
        }
    }

    /// Depth-first search over 4-connected non-hole cells. Goals are
    /// absorbing, so the search does not pass through them.
    pub fn reachable_from_start(&self) -> Vec<bool> {
        let mut seen = vec![false; self.cells.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            if self.cells[i] == Cell::Goal {
                continue;
            }
            for a in [LEFT, DOWN, RIGHT, UP] {
                if let Some(j) = self.neighbour(i, a) {
                    if !seen[j] && self.cells[j] != Cell::Hole {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
        }
        seen
    }

    pub fn all_goals_reachable(&self) -> bool {
        let seen = self.reachable_from_start();
        self.goals().iter().all(|&g| seen[g])
    }

    /// Breadth-first step distance from the start to every cell.
    pub fn distances_from_start(&self) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.cells.len()];
        let mut queue = std::collections::VecDeque::from([0usize]);
        dist[0] = Some(0);
        while let Some(i) = queue.pop_front() {
            if self.cells[i] == Cell::Goal {
                continue;
            }
            for a in [LEFT, DOWN, RIGHT, UP] {
                if let Some(j) = self.neighbour(i, a) {
                    if dist[j].is_none() && self.cells[j] != Cell::Hole {
                        dist[j] = Some(dist[i].unwrap() + 1);
                        queue.push_back(j);
                    }
                }
            }
        }
        dist
    }
}

impl fmt::Display for FrozenLakeMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.cells.chunks(self.width) {
            let line: String = row.iter().map(|c| c.symbol()).collect();
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

impl FromStr for FrozenLakeMap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let rows: Vec<&str> = s.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        let height = rows.len();
        let width = rows.first().map(|r| r.chars().count()).unwrap_or(0);
        let mut cells = Vec::with_capacity(width * height);
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Parse(format!("row {r} has a different width")));
            }
            for ch in row.chars() {
                cells.push(match ch {
                    'S' => Cell::Start,
                    'F' => Cell::Frozen,
                    'H' => Cell::Hole,
                    'G' => Cell::Goal,
                    other => return Err(Error::Parse(format!("unknown cell symbol {other:?}"))),
                });
            }
        }
        Self::new(width, height, cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LakeState {
    pub cell: u32,
    pub steps: u32,
}

#[derive(Debug, Clone)]
pub struct FrozenLake {
    map: FrozenLakeMap,
    agents: usize,
    step_budget: u32,
    goals: Vec<usize>,
}

impl FrozenLake {
    pub fn new(map: FrozenLakeMap, agents: usize, step_budget: u32) -> Self {
        let goals = map.goals();
        Self {
            map,
            agents,
            step_budget,
            goals,
        }
    }

    pub fn map(&self) -> &FrozenLakeMap {
        &self.map
    }

    pub fn step_budget(&self) -> u32 {
        self.step_budget
    }

    fn is_absorbing(&self, cell: usize) -> bool {
        matches!(self.map.cell(cell), Cell::Hole | Cell::Goal)
    }

    /// Arrival step at every goal for one move list, following the same
    /// transition function the planners use.
    fn arrivals(&self, seq: &ActionSequence, earliest: &mut [Option<u32>]) {
        let mut state = self.start_state(seq.agent);
        for &a in &seq.actions {
            if !self.actions(seq.agent, &state).contains(&a) {
                break;
            }
            state = self.step(seq.agent, &state, a);
            if self.map.cell(state.cell as usize) == Cell::Goal {
                let g = self
                    .goals
                    .iter()
                    .position(|&g| g == state.cell as usize)
                    .unwrap();
                earliest[g] = Some(earliest[g].map_or(state.steps, |t| t.min(state.steps)));
            }
        }
    }

    /// Earliest arrival step per goal over the whole team.
    pub fn earliest_arrivals(&self, sequences: &[&ActionSequence]) -> Vec<Option<u32>> {
        let mut earliest = vec![None; self.goals.len()];
        for s in sequences {
            self.arrivals(s, &mut earliest);
        }
        earliest
    }

    pub fn goals_reached(&self, sequences: &[&ActionSequence]) -> usize {
        self.earliest_arrivals(sequences)
            .iter()
            .filter(|t| t.is_some())
            .count()
    }

    pub fn goal_count(&self) -> usize {
        self.goals.len()
    }
}

impl Environment for FrozenLake {
    type State = LakeState;

    fn agent_count(&self) -> usize {
        self.agents
    }

    fn start_state(&self, _agent: AgentId) -> LakeState {
        LakeState { cell: 0, steps: 0 }
    }

    fn actions(&self, _agent: AgentId, state: &LakeState) -> Vec<Action> {
        if state.steps >= self.step_budget || self.is_absorbing(state.cell as usize) {
            return Vec::new();
        }
        [LEFT, DOWN, RIGHT, UP]
            .into_iter()
            .filter(|&a| self.map.neighbour(state.cell as usize, a).is_some())
            .collect()
    }

    fn step(&self, _agent: AgentId, state: &LakeState, action: Action) -> LakeState {
        let cell = self
            .map
            .neighbour(state.cell as usize, action)
            .expect("move leaves the grid") as u32;
        LakeState {
            cell,
            steps: state.steps + 1,
        }
    }

    fn utility(&self, sequences: &[&ActionSequence]) -> f64 {
        self.earliest_arrivals(sequences)
            .iter()
            .flatten()
            .map(|&t| STEP_DECAY.powi(t as i32))
            .sum()
    }

    fn utility_bound(&self) -> f64 {
        self.goals.len().max(1) as f64
    }
}
