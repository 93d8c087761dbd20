//! Road-navigation instances: random DAGs from start to destination with
//! congestion-dependent edge costs.
//!
//! Construction, with every draw on one seeded ChaCha8 stream in a frozen
//! order:
//!
//!   1. a Prüfer sequence of length n−2 (each entry uniform on 0..n) is
//!      decoded into a uniformly random labeled tree;
//!   2. vertices are re-indexed by breadth-first search from vertex 0,
//!      visiting neighbors in ascending original order; the start is the
//!      smallest new index (0), the destination the largest (n−1);
//!   3. every edge is directed from the smaller new index to the larger, so
//!      the graph is acyclic and every walk makes progress toward the
//!      destination;
//!   4. uniformly random forward edges (two index draws, rejecting loops and
//!      duplicates) are added until the graph has m edges;
//!   5. dead ends — non-destination nodes with no outgoing edge — are
//!      patched by an edge straight to the destination, in ascending vertex
//!      order; the final graph may therefore end up with more than m edges,
//!      which the layout reports rather than trims;
//!   6. per edge, in (source, target)-sorted order: one agent cost per
//!      congestion level θ, then one principal cost, all uniform on [0,1).
//!
//! States are nodes, actions are outgoing edges, and rewards are negated
//! costs so that maximizing reward minimizes travel cost. The agent's cost
//! depends on the congestion level θ; the principal's does not. The
//! `uniform_congestion` variant sorts each edge's θ-indexed cost vector
//! ascending, so every edge ranks congestion levels identically.

use super::InstanceError;
use crate::model::{PersuasionMDP, State};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Spec for a road-navigation instance. The seed is part of the spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadNavSpec {
    /// Number of nodes n ≥ 2.
    pub n_nodes: usize,
    /// Target number of edges m, with n−1 ≤ m ≤ n(n−1)/2. Dead-end patching
    /// may push the final count above m.
    pub n_edges: usize,
    /// Number of congestion levels |Θ|.
    pub n_thetas: usize,
    /// Alignment parameter β ∈ [−1, 1] applied to the negated-cost rewards.
    pub beta: f64,
    /// Principal discount γ ∈ [0, 1).
    pub gamma: f64,
    /// Agent discount γ̃ ∈ [0, 1).
    pub gamma_tilde: f64,
    /// Sort each edge's per-θ agent costs ascending, making all edges rank
    /// congestion levels identically.
    pub uniform_congestion: bool,
    /// Seed of the generator stream.
    pub seed: u64,
}

impl Default for RoadNavSpec {
    /// The experiment defaults: n = 20, m = 100, |Θ| = 3, β = 0.5,
    /// γ = γ̃ = 0.8, ordinary congestion.
    fn default() -> Self {
        Self {
            n_nodes: 20,
            n_edges: 100,
            n_thetas: 3,
            beta: 0.5,
            gamma: 0.8,
            gamma_tilde: 0.8,
            uniform_congestion: false,
            seed: 0,
        }
    }
}

impl RoadNavSpec {
    fn validate(&self) -> Result<(), InstanceError> {
        let n = self.n_nodes;
        if n < 2 {
            return Err(InstanceError::InvalidSpec(format!(
                "need at least 2 nodes, got {n}"
            )));
        }
        // A spanning tree needs n−1 edges; the complete graph caps at
        // n(n−1)/2.
        if self.n_edges < n - 1 || self.n_edges > n * (n - 1) / 2 {
            return Err(InstanceError::InvalidSpec(format!(
                "edge count {} outside [{}, {}] for {n} nodes",
                self.n_edges,
                n - 1,
                n * (n - 1) / 2
            )));
        }
        if self.n_thetas == 0 {
            return Err(InstanceError::InvalidSpec(
                "need at least one congestion level".to_string(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.beta) || !self.beta.is_finite() {
            return Err(InstanceError::InvalidSpec(format!(
                "beta must lie in [-1, 1], got {}",
                self.beta
            )));
        }
        for (name, g) in [("gamma", self.gamma), ("gamma_tilde", self.gamma_tilde)] {
            if !(0.0..1.0).contains(&g) {
                return Err(InstanceError::InvalidSpec(format!(
                    "{name} must lie in [0, 1), got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// The generated road layout: the final directed edge list (source < target,
/// sorted) and how many edges the dead-end rule added beyond the requested
/// m.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoadNavLayout {
    /// Directed edges (source, target), sorted ascending.
    pub edges: Vec<(usize, usize)>,
    /// Number of edges added by dead-end patching.
    pub patched: usize,
}

/// Decode a Prüfer sequence over vertices 0..n into the edge list of the
/// labeled tree it encodes.
fn decode_pruefer(n: usize, seq: &[usize]) -> Vec<(usize, usize)> {
    debug_assert_eq!(seq.len(), n - 2);
    let mut degree = vec![1usize; n];
    for &x in seq {
        degree[x] += 1;
    }
    let mut edges = Vec::with_capacity(n - 1);
    let mut ptr = 0;
    while degree[ptr] != 1 {
        ptr += 1;
    }
    let mut leaf = ptr;
    for &x in seq {
        edges.push((leaf, x));
        degree[x] -= 1;
        if degree[x] == 1 && x < ptr {
            leaf = x;
        } else {
            ptr += 1;
            while degree[ptr] != 1 {
                ptr += 1;
            }
            leaf = ptr;
        }
    }
    edges.push((leaf, n - 1));
    edges
}

/// Relabel vertices by BFS discovery order from original vertex 0, visiting
/// neighbors in ascending original order. Returns `new_label[original]`.
fn bfs_relabel(n: usize, tree: &[(usize, usize)]) -> Vec<usize> {
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in tree {
        adjacency[u].push(v);
        adjacency[v].push(u);
    }
    for row in &mut adjacency {
        row.sort_unstable();
    }
    let mut new_label = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::from([0usize]);
    let mut next = 0;
    new_label[0] = 0;
    while let Some(v) = queue.pop_front() {
        for &w in &adjacency[v] {
            if new_label[w] == usize::MAX {
                next += 1;
                new_label[w] = next;
                queue.push_back(w);
            }
        }
    }
    debug_assert!(new_label.iter().all(|&l| l != usize::MAX));
    new_label
}

/// Generate a road-navigation instance from its spec.
pub fn gen_roadnav(spec: &RoadNavSpec) -> Result<PersuasionMDP, InstanceError> {
    gen_roadnav_with_layout(spec).map(|(mdp, _)| mdp)
}

/// Generate a road-navigation instance together with its layout report.
pub fn gen_roadnav_with_layout(
    spec: &RoadNavSpec,
) -> Result<(PersuasionMDP, RoadNavLayout), InstanceError> {
    spec.validate()?;
    let n = spec.n_nodes;
    let nt = spec.n_thetas;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let seq: Vec<usize> = (0..n.saturating_sub(2))
        .map(|_| rng.random_range(0..n))
        .collect();
    let tree = decode_pruefer(n, &seq);
    let new_label = bfs_relabel(n, &tree);

    let mut edges: Vec<(usize, usize)> = tree
        .iter()
        .map(|&(u, v)| {
            let (a, b) = (new_label[u], new_label[v]);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    while edges.len() < spec.n_edges {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if let Err(slot) = edges.binary_search(&key) {
            edges.insert(slot, key);
        }
    }
    let mut patched = 0;
    for v in 0..n - 1 {
        if !edges.iter().any(|&(src, _)| src == v) {
            let key = (v, n - 1);
            let slot = edges
                .binary_search(&key)
                .expect_err("a dead end has no outgoing edge to insert twice");
            edges.insert(slot, key);
            patched += 1;
        }
    }

    let mut agent_cost: Vec<Vec<f64>> = Vec::with_capacity(edges.len());
    let mut principal_cost: Vec<f64> = Vec::with_capacity(edges.len());
    for _ in &edges {
        let mut per_theta: Vec<f64> = (0..nt).map(|_| rng.random::<f64>()).collect();
        if spec.uniform_congestion {
            per_theta.sort_unstable_by(|a, b| {
                a.partial_cmp(b).expect("uniform draws are comparable")
            });
        }
        agent_cost.push(per_theta);
        principal_cost.push(rng.random::<f64>());
    }

    let out_edges: Vec<Vec<usize>> = (0..n)
        .map(|v| {
            (0..edges.len())
                .filter(|&e| edges[e].0 == v)
                .collect::<Vec<_>>()
        })
        .collect();
    let n_actions = out_edges.iter().map(Vec::len).max().expect("n >= 2");

    let mut transition = vec![vec![vec![0.0; n]; n_actions]; n];
    let mut principal_reward = vec![vec![vec![0.0; n_actions]; nt]; n];
    let mut agent_reward = vec![vec![vec![0.0; n_actions]; nt]; n];
    let keep = 1.0 - spec.beta.abs();
    for v in 0..n - 1 {
        for (k, &e) in out_edges[v].iter().enumerate() {
            transition[v][k][edges[e].1] = 1.0;
            for th in 0..nt {
                let principal = -principal_cost[e];
                let agent = -agent_cost[e][th];
                principal_reward[v][th][k] = principal;
                agent_reward[v][th][k] = keep * agent + spec.beta * principal;
            }
        }
    }

    let mut init_dist = vec![0.0; n];
    init_dist[0] = 1.0;
    let mdp = PersuasionMDP {
        states: (0..n)
            .map(|v| State {
                name: format!("v{v}"),
                terminal: v == n - 1,
            })
            .collect(),
        actions: (0..n_actions).map(|a| format!("a{a}")).collect(),
        thetas: (0..nt).map(|th| format!("theta{th}")).collect(),
        available: (0..n)
            .map(|v| (0..out_edges[v].len()).collect())
            .collect(),
        transition,
        prior: vec![vec![1.0 / nt as f64; nt]; n],
        principal_reward,
        agent_reward,
        gamma: spec.gamma,
        gamma_tilde: spec.gamma_tilde,
        init_dist,
    };
    let mdp = mdp.canonicalize()?;
    Ok((mdp, RoadNavLayout { edges, patched }))
}
