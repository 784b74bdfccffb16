//! Exact modularity, node-move sensitivity, exhaustive partition
//! enumeration, and empirical checks of the sparse-graph degeneracy bounds.

mod bounds;
mod enumerate;

pub use bounds::{verify_sparse_bounds, BoundCheck, BoundsOptions, BoundsReport};
pub use enumerate::{
    bell_number, degeneracy_bound, enumerate_degeneracy, for_each_partition_modularity, DegeneracyReport,
    MAX_ENUMERATION_NODES,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Assignment of nodes to communities. Labels are canonical: communities are
/// numbered 0.. in order of their first node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    assignment: Vec<usize>,
    community_count: usize,
}

impl Partition {
    /// Builds a partition from arbitrary labels, relabeling canonically.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut remap = std::collections::HashMap::new();
        let assignment = labels
            .iter()
            .map(|l| {
                let next = remap.len();
                *remap.entry(*l).or_insert(next)
            })
            .collect();
        Self {
            assignment,
            community_count: remap.len(),
        }
    }

    pub fn all_in_one(n: usize) -> Self {
        Self::from_labels(&vec![0; n])
    }

    pub fn singletons(n: usize) -> Self {
        Self::from_labels(&(0..n).collect::<Vec<_>>())
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }

    pub fn community(&self, v: NodeId) -> usize {
        self.assignment[v]
    }

    pub fn labels(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_count(&self) -> usize {
        self.community_count
    }

    pub fn communities(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.community_count];
        for (v, &c) in self.assignment.iter().enumerate() {
            out[c].push(v);
        }
        out
    }

    /// The partition after moving `v` to `target`.
    pub fn moved(&self, v: NodeId, target: MoveTarget) -> Partition {
        let mut labels = self.assignment.clone();
        labels[v] = match target {
            MoveTarget::Community(c) => c,
            MoveTarget::NewCommunity => self.community_count,
        };
        Partition::from_labels(&labels)
    }

    /// Every move of `v` that changes the partition: each other existing
    /// community, plus a fresh singleton unless `v` is already alone.
    pub fn move_targets(&self, v: NodeId) -> Vec<MoveTarget> {
        let own = self.assignment[v];
        let mut targets: Vec<MoveTarget> = (0..self.community_count)
            .filter(|&c| c != own)
            .map(MoveTarget::Community)
            .collect();
        let alone = self.assignment.iter().filter(|&&c| c == own).count() == 1;
        if !alone {
            targets.push(MoveTarget::NewCommunity);
        }
        targets
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveTarget {
    Community(usize),
    NewCommunity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CommunityTerms {
    pub internal_edges: usize,
    pub total_degree: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModularityBreakdown {
    pub q: f64,
    pub communities: Vec<CommunityTerms>,
}

fn check(g: &Graph, p: &Partition) -> Result<()> {
    if p.len() != g.node_count() {
        return Err(Error::InvalidPartition(format!(
            "partition covers {} nodes, graph has {}",
            p.len(),
            g.node_count()
        )));
    }
    if g.edge_count() == 0 {
        return Err(Error::UndefinedModularity);
    }
    Ok(())
}

/// `Q = sum_c [ e_c / m - (K_c / 2m)^2 ]`.
pub fn modularity(g: &Graph, p: &Partition) -> Result<ModularityBreakdown> {
    check(g, p)?;
    let mut communities = vec![
        CommunityTerms {
            internal_edges: 0,
            total_degree: 0,
        };
        p.community_count()
    ];
    for v in g.nodes() {
        communities[p.community(v)].total_degree += g.degree(v);
    }
    for (u, v) in g.edges() {
        if p.community(u) == p.community(v) {
            communities[p.community(u)].internal_edges += 1;
        }
    }
    let m = g.edge_count() as f64;
    let q = communities
        .iter()
        .map(|c| {
            let share = c.total_degree as f64 / (2.0 * m);
            c.internal_edges as f64 / m - share * share
        })
        .sum();
    Ok(ModularityBreakdown { q, communities })
}

/// Per-community degree totals, for incremental move evaluation.
#[derive(Debug, Clone)]
pub struct CommunityDegrees {
    totals: Vec<usize>,
}

impl CommunityDegrees {
    pub fn new(g: &Graph, p: &Partition) -> Self {
        let mut totals = vec![0; p.community_count()];
        for v in g.nodes() {
            totals[p.community(v)] += g.degree(v);
        }
        Self { totals }
    }
}

/// `Q(after) - Q(before)` for moving `v` to `target`, from the edge and
/// degree-penalty terms of the two affected communities only.
pub fn move_delta(g: &Graph, p: &Partition, degrees: &CommunityDegrees, v: NodeId, target: MoveTarget) -> f64 {
    let source = p.community(v);
    if target == MoveTarget::Community(source) {
        return 0.0;
    }
    let m = g.edge_count() as f64;
    let k = g.degree(v) as f64;
    let (links_target, k_target) = match target {
        MoveTarget::Community(r) => {
            let links = g.neighbors(v).iter().filter(|&&w| p.community(w) == r).count();
            (links as f64, degrees.totals[r] as f64)
        }
        MoveTarget::NewCommunity => (0.0, 0.0),
    };
    let links_source = g.neighbors(v).iter().filter(|&&w| p.community(w) == source).count() as f64;
    let k_source = degrees.totals[source] as f64;
    let edge_term = (links_target - links_source) / m;
    let penalty = k * (2.0 * (k_target - k_source) + 2.0 * k) / (4.0 * m * m);
    edge_term - penalty
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sensitivity {
    pub delta: f64,
    /// Move attaining the maximum; `None` when no move changes the partition.
    pub target: Option<MoveTarget>,
}

/// `max_r |Q(p) - Q(p with v moved to r)|` over every partition-changing move.
pub fn sensitivity(g: &Graph, p: &Partition, v: NodeId) -> Result<Sensitivity> {
    check(g, p)?;
    let degrees = CommunityDegrees::new(g, p);
    Ok(sensitivity_with(g, p, &degrees, v))
}

pub(crate) fn sensitivity_with(g: &Graph, p: &Partition, degrees: &CommunityDegrees, v: NodeId) -> Sensitivity {
    let mut best = Sensitivity {
        delta: 0.0,
        target: None,
    };
    for target in p.move_targets(v) {
        let d = move_delta(g, p, degrees, v, target).abs();
        if best.target.is_none() || d > best.delta {
            best = Sensitivity {
                delta: d,
                target: Some(target),
            };
        }
    }
    best
}

/// Bound on a single low-degree move: `2k/m + k^2 / (2m^2)`.
pub fn single_move_bound(degree: usize, edges: usize) -> f64 {
    let k = degree as f64;
    let m = edges as f64;
    2.0 * k / m + k * k / (2.0 * m * m)
}

/// Bound on the sensitivity perturbation from moving a non-adjacent node:
/// `2d^2 / (2m)^2`.
pub fn pair_perturbation_bound(d: usize, edges: usize) -> f64 {
    let d = d as f64;
    let two_m = 2.0 * edges as f64;
    2.0 * d * d / (two_m * two_m)
}
