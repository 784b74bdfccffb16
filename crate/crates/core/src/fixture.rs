//! Seeded synthetic graphs.
//!
//! All generators draw from `ChaCha8Rng::seed_from_u64(seed)` (the ChaCha
//! stream cipher with 8 rounds, as implemented by `rand_chacha`), so a seed
//! yields the same graph on every platform.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{load_graph, Graph, NodeMeta};

pub const MIN_FIXTURE_NODES: usize = 10;

/// Degree profile of sparse knowledge graphs: most nodes are leaves hanging
/// off a connected core, average degree around three.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseProfile {
    pub pendant_fraction: f64,
    pub target_average_degree: f64,
    pub min_average_degree: f64,
    pub max_average_degree: f64,
    pub min_tokens: u64,
    pub max_tokens: u64,
}

impl Default for SparseProfile {
    fn default() -> Self {
        Self {
            pendant_fraction: 0.575,
            target_average_degree: 3.2,
            min_average_degree: 2.88,
            max_average_degree: 4.42,
            min_tokens: 10,
            max_tokens: 120,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub nodes: Vec<NodeMeta>,
    pub edges: Vec<(String, String)>,
}

impl Fixture {
    pub fn graph(&self) -> Result<Graph> {
        load_graph(&self.edges, self.nodes.clone())
    }
}

/// Degree-weighted sampling: every node holds one base ticket plus one per
/// incident edge.
struct Urn {
    tickets: Vec<usize>,
}

impl Urn {
    fn draw(&self, rng: &mut impl Rng) -> usize {
        self.tickets[rng.gen_range(0..self.tickets.len())]
    }
}

struct Builder {
    degree: Vec<usize>,
    edges: Vec<(usize, usize)>,
    seen: HashSet<(usize, usize)>,
    urn: Urn,
}

impl Builder {
    fn add(&mut self, u: usize, v: usize) -> bool {
        let key = (u.min(v), u.max(v));
        if u == v || !self.seen.insert(key) {
            return false;
        }
        self.edges.push(key);
        self.degree[u] += 1;
        self.degree[v] += 1;
        self.urn.tickets.push(u);
        self.urn.tickets.push(v);
        true
    }
}

/// Generates a connected sparse graph with `n` nodes: a random preferential
/// tree over the core, extra core edges to reach the target average degree,
/// and pendant leaves attached preferentially to core nodes.
pub fn kg_sparse(n: usize, seed: u64) -> Result<Fixture> {
    kg_sparse_with(n, seed, &SparseProfile::default())
}

pub fn kg_sparse_with(n: usize, seed: u64, profile: &SparseProfile) -> Result<Fixture> {
    if n < MIN_FIXTURE_NODES {
        return Err(Error::config(format!(
            "fixture needs at least {MIN_FIXTURE_NODES} nodes, got {n}"
        )));
    }
    let pendants = (profile.pendant_fraction * n as f64).round() as usize;
    let core = n - pendants;
    if core < 3 {
        return Err(Error::config(format!(
            "profile leaves only {core} core nodes for n = {n}"
        )));
    }
    let capacity = core * (core - 1) / 2;
    let wanted = (profile.target_average_degree * n as f64 / 2.0).round() as usize;
    let floor = (profile.min_average_degree * n as f64 / 2.0).ceil() as usize;
    let core_edges = wanted.saturating_sub(pendants).min(capacity);
    if pendants + core_edges < floor || core_edges < core {
        return Err(Error::config(format!(
            "average degree {} unreachable with {core} core nodes and {pendants} pendants",
            profile.min_average_degree
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Builder {
        degree: vec![0; n],
        edges: Vec::with_capacity(pendants + core_edges),
        seen: HashSet::new(),
        urn: Urn { tickets: vec![0] },
    };
    for v in 1..core {
        let u = b.urn.draw(&mut rng);
        b.add(u, v);
        b.urn.tickets.push(v);
    }
    // every core node needs a second core edge so only pendants have degree 1
    for v in 0..core {
        while b.degree[v] < 2 {
            let u = rng.gen_range(0..core);
            b.add(u, v);
        }
    }
    let mut attempts = 0usize;
    while b.edges.len() < core_edges {
        attempts += 1;
        if attempts > 1000 * core_edges {
            return Err(Error::config("could not place extra core edges"));
        }
        let u = b.urn.draw(&mut rng);
        let v = b.urn.draw(&mut rng);
        b.add(u, v);
    }
    for v in core..n {
        let u = loop {
            let u = b.urn.draw(&mut rng);
            if u < core {
                break u;
            }
        };
        b.add(u, v);
    }
    if 2.0 * b.edges.len() as f64 / n as f64 > profile.max_average_degree {
        return Err(Error::config(format!(
            "average degree exceeds {}",
            profile.max_average_degree
        )));
    }

    // shuffle ids so structure does not follow lexical order
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let width = (n - 1).to_string().len();
    let name = |v: usize| format!("n{:0width$}", perm[v]);

    let mut nodes: Vec<NodeMeta> = (0..n)
        .map(|v| {
            let tokens = rng.gen_range(profile.min_tokens..=profile.max_tokens);
            NodeMeta::new(name(v), format!("entity {}", perm[v]), tokens)
        })
        .collect();
    nodes.sort_by(|a, b| a.external_id.cmp(&b.external_id));
    let mut edges: Vec<(String, String)> = b
        .edges
        .iter()
        .map(|&(u, v)| {
            let (a, c) = (name(u), name(v));
            if a < c {
                (a, c)
            } else {
                (c, a)
            }
        })
        .collect();
    edges.sort();
    Ok(Fixture { nodes, edges })
}

/// Small connected graph: a random tree plus up to `extra` random chords.
/// Token counts are all 10.
pub fn random_sparse(n: usize, extra: usize, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = HashSet::new();
    for v in 1..n {
        edges.insert((rng.gen_range(0..v), v));
    }
    for _ in 0..extra {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        if u != v {
            edges.insert((u.min(v), u.max(v)));
        }
    }
    let width = n.saturating_sub(1).to_string().len();
    let meta = (0..n).map(|v| NodeMeta::new(format!("v{v:0width$}"), "", 10)).collect();
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    Graph::from_edges(meta, edges)
}

/// Share of nodes with degree exactly one.
pub fn pendant_share(g: &Graph) -> f64 {
    g.nodes().filter(|&v| g.degree(v) == 1).count() as f64 / g.node_count() as f64
}
