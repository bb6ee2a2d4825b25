//! Budgeted graph coverage: agents walk a weighted roadmap from a common
//! depot and a target counts as covered once any agent traverses one of its
//! covering edges.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Environment;
use crate::error::{Error, Result};
use crate::types::{Action, ActionSequence, AgentId};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: u32,
    pub u: u32,
    pub v: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub covering_edges: Vec<u32>,
}

/// Serializable coverage instance. Vertex, edge and target ids are their
/// positions in the respective lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphCoverageSpec {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<Edge>,
    pub targets: Vec<Target>,
    pub depot: u32,
    /// Per-agent travel budget.
    pub budget: f64,
}

impl GraphCoverageSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Construction(m));
        if self.budget.is_nan() || self.budget <= 0.0 {
            return bad(format!("budget {} must be positive", self.budget));
        }
        let nv = self.vertices.len() as u32;
        if self.depot >= nv {
            return bad("depot is not a vertex".into());
        }
        for (i, v) in self.vertices.iter().enumerate() {
            if v.id as usize != i {
                return bad(format!("vertex {i} carries id {}", v.id));
            }
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e.id as usize != i {
                return bad(format!("edge {i} carries id {}", e.id));
            }
            if e.u >= nv || e.v >= nv {
                return bad(format!("edge {i} references a missing vertex"));
            }
            if e.weight.is_nan() || e.weight <= 0.0 {
                return bad(format!("edge {i} has non-positive weight"));
            }
        }
        if self.targets.is_empty() {
            return bad("instance has no targets".into());
        }
        for (i, t) in self.targets.iter().enumerate() {
            if t.id as usize != i {
                return bad(format!("target {i} carries id {}", t.id));
            }
            if t.covering_edges.is_empty() {
                return bad(format!("target {i} has no covering edge"));
            }
            if t.covering_edges
                .iter()
                .any(|&e| e as usize >= self.edges.len())
            {
                return bad(format!("target {i} references a missing edge"));
            }
        }
        let adj = adjacency(self);
        let mut seen = vec![false; self.vertices.len()];
        let mut queue = VecDeque::from([self.depot as usize]);
        seen[self.depot as usize] = true;
        while let Some(u) = queue.pop_front() {
            for &(_, w) in &adj[u] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    queue.push_back(w as usize);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return bad("graph is not connected from the depot".into());
        }
        Ok(())
    }
}

fn adjacency(spec: &GraphCoverageSpec) -> Vec<Vec<(u32, u32)>> {
    let mut adj = vec![Vec::new(); spec.vertices.len()];
    for e in &spec.edges {
        adj[e.u as usize].push((e.id, e.v));
        adj[e.v as usize].push((e.id, e.u));
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkState {
    pub vertex: u32,
    pub remaining: f64,
}

#[derive(Debug, Clone)]
pub struct GraphCoverage {
    spec: GraphCoverageSpec,
    agents: usize,
    // incident (edge id, neighbour), sorted by edge id
    adjacency: Vec<Vec<(u32, u32)>>,
    edge_targets: Vec<Vec<u32>>,
}

const BUDGET_SLACK: f64 = 1e-9;

impl GraphCoverage {
    pub fn build(spec: GraphCoverageSpec, agents: usize) -> Result<Self> {
        spec.validate()?;
        if agents == 0 {
            return Err(Error::Construction("need at least one agent".into()));
        }
        let adjacency = adjacency(&spec);
        let mut edge_targets = vec![Vec::new(); spec.edges.len()];
        for t in &spec.targets {
            for &e in &t.covering_edges {
                edge_targets[e as usize].push(t.id);
            }
        }
        Ok(Self {
            spec,
            agents,
            adjacency,
            edge_targets,
        })
    }

    pub fn spec(&self) -> &GraphCoverageSpec {
        &self.spec
    }

    /// Number of distinct targets covered by the given walks.
    pub fn covered_targets(&self, sequences: &[&ActionSequence]) -> usize {
        let mut covered = vec![false; self.spec.targets.len()];
        for s in sequences {
            let mut state = self.start_state(s.agent);
            for &e in &s.actions {
                let Some(next) = self.traverse(&state, e) else {
                    break;
                };
                for &t in &self.edge_targets[e as usize] {
                    covered[t as usize] = true;
                }
                state = next;
            }
        }
        covered.iter().filter(|c| **c).count()
    }

    fn traverse(&self, state: &WalkState, edge: Action) -> Option<WalkState> {
        let e = self.spec.edges.get(edge as usize)?;
        let other = if e.u == state.vertex {
            e.v
        } else if e.v == state.vertex {
            e.u
        } else {
            return None;
        };
        if e.weight > state.remaining + BUDGET_SLACK {
            return None;
        }
        Some(WalkState {
            vertex: other,
            remaining: (state.remaining - e.weight).max(0.0),
        })
    }
}

impl Environment for GraphCoverage {
    type State = WalkState;

    fn agent_count(&self) -> usize {
        self.agents
    }

    fn start_state(&self, _agent: AgentId) -> WalkState {
        WalkState {
            vertex: self.spec.depot,
            remaining: self.spec.budget,
        }
    }

    fn actions(&self, _agent: AgentId, state: &WalkState) -> Vec<Action> {
        self.adjacency[state.vertex as usize]
            .iter()
            .filter(|(e, _)| self.spec.edges[*e as usize].weight <= state.remaining + BUDGET_SLACK)
            .map(|(e, _)| *e)
            .collect()
    }

    fn step(&self, _agent: AgentId, state: &WalkState, action: Action) -> WalkState {
        self.traverse(state, action)
            .expect("edge not traversable from this state")
    }

    fn action_cost(&self, _agent: AgentId, _state: &WalkState, action: Action) -> f64 {
        self.spec.edges[action as usize].weight
    }

    fn utility(&self, sequences: &[&ActionSequence]) -> f64 {
        self.covered_targets(sequences) as f64 / self.spec.targets.len() as f64
    }

    fn utility_bound(&self) -> f64 {
        1.0
    }
}

fn point_segment_distance(px: f64, py: f64, a: &Vertex, b: &Vertex) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((px - a.x) * dx + (py - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let (cx, cy) = (a.x + t * dx, a.y + t * dy);
    ((px - cx).powi(2) + (py - cy).powi(2)).sqrt()
}

/// Width and height of the synthetic region.
pub const REGION: (f64, f64) = (2.0, 1.0);
const NEIGHBOURS: usize = 4;

/// Random planar roadmap with `k = 4` nearest-neighbour edges, reduced to its
/// largest connected component. Targets are dropped uniformly over the region;
/// a target's covering edges are those within `radius`, or its single nearest
/// edge when none are. The depot is the vertex closest to the centroid.
pub fn synthesize_coverage_instance<R: Rng>(
    vertex_count: usize,
    target_count: usize,
    radius: f64,
    budget: f64,
    rng: &mut R,
) -> Result<GraphCoverageSpec> {
    if target_count < 1 || vertex_count < target_count || vertex_count < 2 {
        return Err(Error::InvalidConfig(format!(
            "need vertexCount >= targetCount >= 1 (got {vertex_count}, {target_count})"
        )));
    }
    let points: Vec<(f64, f64)> = (0..vertex_count)
        .map(|_| (rng.gen::<f64>() * REGION.0, rng.gen::<f64>() * REGION.1))
        .collect();
    let dist = |i: usize, j: usize| {
        ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2)).sqrt()
    };

    let mut pairs = std::collections::BTreeSet::new();
    for i in 0..vertex_count {
        let mut others: Vec<usize> = (0..vertex_count).filter(|&j| j != i).collect();
        others.sort_by(|&a, &b| dist(i, a).total_cmp(&dist(i, b)).then(a.cmp(&b)));
        for &j in others.iter().take(NEIGHBOURS) {
            pairs.insert((i.min(j), i.max(j)));
        }
    }

    // largest connected component, lowest vertex index breaking ties
    let mut comp = vec![usize::MAX; vertex_count];
    let mut adj = vec![Vec::new(); vertex_count];
    for &(a, b) in &pairs {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut sizes = Vec::new();
    for s in 0..vertex_count {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0;
        let mut stack = vec![s];
        comp[s] = id;
        while let Some(u) = stack.pop() {
            size += 1;
            for &w in &adj[u] {
                if comp[w] == usize::MAX {
                    comp[w] = id;
                    stack.push(w);
                }
            }
        }
        sizes.push(size);
    }
    let largest = (0..sizes.len())
        .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
        .unwrap();
    let mut remap = vec![u32::MAX; vertex_count];
    let mut vertices = Vec::new();
    for i in 0..vertex_count {
        if comp[i] == largest {
            remap[i] = vertices.len() as u32;
            vertices.push(Vertex {
                id: vertices.len() as u32,
                x: points[i].0,
                y: points[i].1,
            });
        }
    }
    let mut edges = Vec::new();
    for &(a, b) in &pairs {
        if comp[a] == largest {
            edges.push(Edge {
                id: edges.len() as u32,
                u: remap[a],
                v: remap[b],
                weight: dist(a, b),
            });
        }
    }

    let cx = vertices.iter().map(|v| v.x).sum::<f64>() / vertices.len() as f64;
    let cy = vertices.iter().map(|v| v.y).sum::<f64>() / vertices.len() as f64;
    let depot = vertices
        .iter()
        .min_by(|a, b| {
            ((a.x - cx).powi(2) + (a.y - cy).powi(2))
                .total_cmp(&((b.x - cx).powi(2) + (b.y - cy).powi(2)))
        })
        .unwrap()
        .id;

    let mut targets = Vec::with_capacity(target_count);
    for id in 0..target_count as u32 {
        let (x, y) = (rng.gen::<f64>() * REGION.0, rng.gen::<f64>() * REGION.1);
        let d: Vec<f64> = edges
            .iter()
            .map(|e| point_segment_distance(x, y, &vertices[e.u as usize], &vertices[e.v as usize]))
            .collect();
        let mut covering: Vec<u32> = (0..edges.len())
            .filter(|&i| d[i] <= radius)
            .map(|i| i as u32)
            .collect();
        if covering.is_empty() {
            let nearest = (0..edges.len())
                .min_by(|&a, &b| d[a].total_cmp(&d[b]))
                .unwrap();
            covering.push(nearest as u32);
        }
        targets.push(Target {
            id,
            x,
            y,
            covering_edges: covering,
        });
    }

    Ok(GraphCoverageSpec {
        vertices,
        edges,
        targets,
        depot,
        budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Path graph 0-1-2-3 with unit edges; target i covered by edge i.
    fn path_instance(budget: f64) -> GraphCoverageSpec {
        let vertices = (0..4)
            .map(|i| Vertex {
                id: i,
                x: i as f64,
                y: 0.0,
            })
            .collect();
        let edges = (0..3)
            .map(|i| Edge {
                id: i,
                u: i,
                v: i + 1,
                weight: 1.0,
            })
            .collect();
        let targets = (0..3)
            .map(|i| Target {
                id: i,
                x: i as f64 + 0.5,
                y: 0.1,
                covering_edges: vec![i],
            })
            .collect();
        GraphCoverageSpec {
            vertices,
            edges,
            targets,
            depot: 0,
            budget,
        }
    }

    #[test]
    fn shared_edge_counts_once() {
        let g = GraphCoverage::build(path_instance(3.0), 2).unwrap();
        let a = ActionSequence::new(0, vec![0]);
        let b = ActionSequence::new(1, vec![0]);
        assert!((g.utility(&[&a, &b]) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(g.utility(&[]), 0.0);
    }

    #[test]
    fn budget_limits_actions() {
        let g = GraphCoverage::build(path_instance(1.5), 1).unwrap();
        let s = g.start_state(0);
        assert_eq!(g.actions(0, &s), vec![0]);
        let s = g.step(0, &s, 0);
        assert!(g.actions(0, &s).is_empty());
        assert_eq!(g.replay(0, &[0]).unwrap().1, 1.0);
        assert!(g.replay(0, &[0, 1]).is_none());
    }

    #[test]
    fn invalid_instances_rejected() {
        let mut spec = path_instance(1.0);
        spec.targets[0].covering_edges.clear();
        assert!(GraphCoverage::build(spec, 1).is_err());
        let mut spec = path_instance(1.0);
        spec.edges[1].weight = 0.0;
        assert!(GraphCoverage::build(spec, 1).is_err());
        let mut spec = path_instance(1.0);
        spec.edges.pop();
        spec.targets.pop();
        assert!(GraphCoverage::build(spec, 1).is_err());
    }

    #[test]
    fn json_round_trip() {
        let spec = path_instance(2.0);
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            serde_json::from_str::<GraphCoverageSpec>(&text).unwrap(),
            spec
        );
    }

    #[test]
    fn synthesis_is_seeded() {
        let gen = |s| {
            synthesize_coverage_instance(50, 20, 0.1, 1.0, &mut ChaCha8Rng::seed_from_u64(s))
                .unwrap()
        };
        assert_eq!(gen(9), gen(9));
        assert_ne!(gen(9), gen(10));
    }

    #[test]
    fn synthesis_rejects_zero_targets() {
        let r = synthesize_coverage_instance(10, 0, 0.1, 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(r.is_err());
    }
}
