//! Seeded instance generators and the named examples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{LpInstance, Mode, ModelError};
use crate::oracle::enumerate_bfs;

/// Attempts before a rejection-sampling generator gives up.
pub const MAX_REJECTIONS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstanceError {
    #[error("source and sink are not connected")]
    DegenerateGraph,
    #[error("no acceptable instance after {0} attempts")]
    Rejected(usize),
    #[error("invalid generator parameters: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Parameters of the random LP generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomLpSpec {
    pub n: usize,
    pub m: usize,
    pub a_range: (i64, i64),
    pub b_range: (i64, i64),
    pub c_range: (i64, i64),
    pub mode: Mode,
    /// Also reject instances whose optimum is not a single basic solution.
    pub unique_optimum: bool,
    pub seed: u64,
}

impl RandomLpSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        RandomLpSpec {
            n,
            m,
            a_range: (-2, 3),
            b_range: (-3, 3),
            c_range: (1, 5),
            mode: Mode::Directed,
            unique_optimum: false,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GeneratorSpec {
    /// Random directed graph, unit demand from node 0 to the last node.
    ShortestPath { nodes: usize, edges: usize, max_cost: i64, mode: Mode, seed: u64 },
    /// Random directed graph with integer supplies summing to zero.
    Transshipment { nodes: usize, edges: usize, max_cost: i64, max_supply: i64, seed: u64 },
    RandomPositiveLp(RandomLpSpec),
    /// `A = [1 1]`, `b = 1`, `c = (opt, opt + phi)`, `x0 = (1/2, 1/2)`.
    ThmOne { opt: i64, phi: i64 },
    /// Shortest path on s->a, a->t, s->t with costs 1, 1, 3.
    Triangle,
    /// The triangle with a free direct edge.
    ZeroCostDemo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub instance: LpInstance,
    pub x0: Option<Vec<f64>>,
}

/// Builds the instance described by `spec`; deterministic per seed.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated, InstanceError> {
    match spec {
        GeneratorSpec::ThmOne { opt, phi } => {
            if *opt < 1 || *phi < 1 {
                return Err(InstanceError::InvalidSpec("opt and phi must be at least 1".into()));
            }
            let instance = LpInstance::new(vec![vec![1, 1]], vec![1], vec![*opt, opt + phi], Mode::Directed)?;
            Ok(Generated { instance, x0: Some(vec![0.5, 0.5]) })
        }
        GeneratorSpec::Triangle => Ok(Generated { instance: triangle(vec![1, 1, 3])?, x0: Some(vec![1.0; 3]) }),
        GeneratorSpec::ZeroCostDemo => {
            Ok(Generated { instance: triangle(vec![1, 1, 0])?, x0: Some(vec![1.0; 3]) })
        }
        GeneratorSpec::ShortestPath { nodes, edges, max_cost, mode, seed } => {
            random_shortest_path(*nodes, *edges, *max_cost, *mode, *seed)
        }
        GeneratorSpec::Transshipment { nodes, edges, max_cost, max_supply, seed } => {
            random_transshipment(*nodes, *edges, *max_cost, *max_supply, *seed)
        }
        GeneratorSpec::RandomPositiveLp(s) => random_positive_lp(s),
    }
}

fn triangle(c: Vec<i64>) -> Result<LpInstance, InstanceError> {
    shortest_path(3, &[(0, 1, c[0]), (1, 2, c[1]), (0, 2, c[2])], 0, 2, Mode::Directed)
}

/// Node-edge incidence system with the last row dropped: an edge `u -> v`
/// has `+1` at `u` and `-1` at `v`; `supplies` must sum to zero.
pub fn graph_instance(
    nodes: usize,
    edges: &[(usize, usize, i64)],
    supplies: &[i64],
    mode: Mode,
) -> Result<LpInstance, InstanceError> {
    if supplies.len() != nodes || supplies.iter().sum::<i64>() != 0 {
        return Err(InstanceError::InvalidSpec("supplies must have one entry per node and sum to zero".into()));
    }
    if edges.iter().any(|&(u, v, _)| u >= nodes || v >= nodes || u == v) {
        return Err(InstanceError::InvalidSpec("edge endpoints out of range or a self loop".into()));
    }
    let rows = nodes - 1;
    let mut a = vec![vec![0i64; edges.len()]; rows];
    for (e, &(u, v, _)) in edges.iter().enumerate() {
        if u < rows {
            a[u][e] += 1;
        }
        if v < rows {
            a[v][e] -= 1;
        }
    }
    let c = edges.iter().map(|e| e.2).collect();
    Ok(LpInstance::new(a, supplies[..rows].to_vec(), c, mode)?)
}

/// Unit flow from `source` to `sink`, with the sink row ordered last.
pub fn shortest_path(
    nodes: usize,
    edges: &[(usize, usize, i64)],
    source: usize,
    sink: usize,
    mode: Mode,
) -> Result<LpInstance, InstanceError> {
    if source >= nodes || sink >= nodes || source == sink {
        return Err(InstanceError::InvalidSpec("bad source or sink".into()));
    }
    let directed = mode == Mode::Directed;
    if !reachable(nodes, edges, source, directed)[sink] {
        return Err(InstanceError::DegenerateGraph);
    }
    // Relabel so the sink is the last node.
    let relabel = |v: usize| if v == sink { nodes - 1 } else if v == nodes - 1 { sink } else { v };
    let edges: Vec<_> = edges.iter().map(|&(u, v, c)| (relabel(u), relabel(v), c)).collect();
    let mut supplies = vec![0; nodes];
    supplies[relabel(source)] = 1;
    supplies[nodes - 1] = -1;
    graph_instance(nodes, &edges, &supplies, mode)
}

fn reachable(nodes: usize, edges: &[(usize, usize, i64)], from: usize, directed: bool) -> Vec<bool> {
    let mut seen = vec![false; nodes];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        for &(a, b, _) in edges {
            let next = if a == u {
                Some(b)
            } else if !directed && b == u {
                Some(a)
            } else {
                None
            };
            if let Some(v) = next {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
    }
    seen
}

fn random_edges(rng: &mut ChaCha8Rng, nodes: usize, edges: usize, max_cost: i64) -> Vec<(usize, usize, i64)> {
    (0..edges)
        .map(|_| {
            let u = rng.gen_range(0..nodes);
            let mut v = rng.gen_range(0..nodes - 1);
            if v >= u {
                v += 1;
            }
            (u, v, rng.gen_range(1..=max_cost))
        })
        .collect()
}

fn check_graph_params(nodes: usize, edges: usize, max_cost: i64) -> Result<(), InstanceError> {
    if nodes < 2 || edges < nodes - 1 || max_cost < 1 {
        return Err(InstanceError::InvalidSpec(
            "need at least 2 nodes, nodes - 1 edges and max_cost >= 1".into(),
        ));
    }
    Ok(())
}

fn random_shortest_path(
    nodes: usize,
    edges: usize,
    max_cost: i64,
    mode: Mode,
    seed: u64,
) -> Result<Generated, InstanceError> {
    check_graph_params(nodes, edges, max_cost)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let es = random_edges(&mut rng, nodes, edges, max_cost);
        if !reachable(nodes, &es, 0, false).iter().all(|&r| r) {
            continue;
        }
        match shortest_path(nodes, &es, 0, nodes - 1, mode) {
            Ok(instance) => return Ok(Generated { instance, x0: None }),
            Err(InstanceError::DegenerateGraph) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(InstanceError::Rejected(MAX_REJECTIONS))
}

fn random_transshipment(
    nodes: usize,
    edges: usize,
    max_cost: i64,
    max_supply: i64,
    seed: u64,
) -> Result<Generated, InstanceError> {
    check_graph_params(nodes, edges, max_cost)?;
    if max_supply < 1 {
        return Err(InstanceError::InvalidSpec("max_supply must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_REJECTIONS {
        let es = random_edges(&mut rng, nodes, edges, max_cost);
        if !reachable(nodes, &es, 0, false).iter().all(|&r| r) {
            continue;
        }
        let mut supplies: Vec<i64> = (0..nodes - 1).map(|_| rng.gen_range(-max_supply..=max_supply)).collect();
        supplies.push(-supplies.iter().sum::<i64>());
        let Ok(instance) = graph_instance(nodes, &es, &supplies, Mode::Directed) else {
            continue;
        };
        if enumerate_bfs(&instance).is_ok() {
            return Ok(Generated { instance, x0: None });
        }
    }
    Err(InstanceError::Rejected(MAX_REJECTIONS))
}

fn random_positive_lp(s: &RandomLpSpec) -> Result<Generated, InstanceError> {
    if s.n == 0 || s.m < s.n || s.c_range.0 < 1 || s.a_range.0 > s.a_range.1 || s.b_range.0 > s.b_range.1
        || s.c_range.0 > s.c_range.1
    {
        return Err(InstanceError::InvalidSpec("need 1 <= n <= m, c >= 1 and ordered ranges".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    for _ in 0..MAX_REJECTIONS {
        let a: Vec<Vec<i64>> = (0..s.n)
            .map(|_| (0..s.m).map(|_| rng.gen_range(s.a_range.0..=s.a_range.1)).collect())
            .collect();
        let b: Vec<i64> = (0..s.n).map(|_| rng.gen_range(s.b_range.0..=s.b_range.1)).collect();
        let c: Vec<i64> = (0..s.m).map(|_| rng.gen_range(s.c_range.0..=s.c_range.1)).collect();
        let Ok(instance) = LpInstance::new(a, b, c, s.mode) else {
            continue;
        };
        if instance.n() != s.n {
            continue;
        }
        let Ok(report) = enumerate_bfs(&instance) else {
            continue;
        };
        if s.unique_optimum && !(report.unique_optimum() && report.phi.is_some()) {
            continue;
        }
        return Ok(Generated { instance, x0: None });
    }
    Err(InstanceError::Rejected(MAX_REJECTIONS))
}
