use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::enumerate::{enumerate_degeneracy, thresholds, DegeneracyReport, MAX_ENUMERATION_NODES};
use super::{move_delta, pair_perturbation_bound, sensitivity_with, single_move_bound, CommunityDegrees, Partition};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundsOptions {
    /// Random partitions tested in addition to all-in-one and singletons.
    pub partitions: usize,
    /// Cap on low-degree non-adjacent ordered pairs tested per partition.
    pub max_pairs_per_partition: usize,
    pub seed: u64,
}

impl Default for BoundsOptions {
    fn default() -> Self {
        Self {
            partitions: 32,
            max_pairs_per_partition: 64,
            seed: 0,
        }
    }
}

/// Tally for one inequality: how often it was tested, how often it failed,
/// and the largest observed `value / bound`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct BoundCheck {
    pub checks: u64,
    pub violations: u64,
    pub max_ratio: f64,
}

impl BoundCheck {
    pub fn record(&mut self, observed: f64, bound: f64) {
        self.checks += 1;
        if observed > bound + TOLERANCE {
            self.violations += 1;
        }
        if bound > 0.0 {
            self.max_ratio = self.max_ratio.max(observed / bound);
        } else if observed > TOLERANCE {
            self.max_ratio = f64::INFINITY;
        }
    }

    pub fn merge(&mut self, other: &BoundCheck) {
        self.checks += other.checks;
        self.violations += other.violations;
        self.max_ratio = self.max_ratio.max(other.max_ratio);
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub d: usize,
    pub partitions_tested: usize,
    /// Single-move bound `|dQ| <= 2k/m + k^2/(2m^2)` for nodes with `k <= d`.
    pub single_move: BoundCheck,
    /// Pair bound `|D_i(s) - D_i(s')| <= 2d^2/(2m)^2` for non-adjacent pairs.
    pub pair_perturbation: BoundCheck,
    /// Enumeration at the proof threshold; `None` when the graph is too large.
    pub degeneracy: Option<DegeneracyReport>,
}

impl BoundsReport {
    pub fn degeneracy_certified(&self) -> Option<bool> {
        self.degeneracy.as_ref().map(|r| r.count >= r.degeneracy_bound)
    }

    pub fn passed(&self) -> bool {
        self.single_move.passed() && self.pair_perturbation.passed() && self.degeneracy_certified() != Some(false)
    }
}

pub(crate) fn random_partition(rng: &mut impl Rng, n: usize) -> Partition {
    let communities = rng.gen_range(1..=n.max(1));
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..communities)).collect();
    Partition::from_labels(&labels)
}

/// Checks the single-move bound for every low-degree node and every move.
pub fn check_single_moves(g: &Graph, p: &Partition, d: usize, tally: &mut BoundCheck) {
    let m = g.edge_count();
    let degrees = CommunityDegrees::new(g, p);
    for v in g.nodes().filter(|&v| g.degree(v) <= d) {
        let bound = single_move_bound(g.degree(v), m);
        for target in p.move_targets(v) {
            tally.record(move_delta(g, p, &degrees, v, target).abs(), bound);
        }
    }
}

/// Checks the pair bound for node `i` against every reassignment of `j`.
pub fn check_pair(g: &Graph, p: &Partition, d: usize, i: NodeId, j: NodeId, tally: &mut BoundCheck) {
    let bound = pair_perturbation_bound(d, g.edge_count());
    let before = sensitivity_with(g, p, &CommunityDegrees::new(g, p), i).delta;
    for target in p.move_targets(j) {
        let q = p.moved(j, target);
        let after = sensitivity_with(g, &q, &CommunityDegrees::new(g, &q), i).delta;
        tally.record((before - after).abs(), bound);
    }
}

/// Ordered non-adjacent pairs of distinct nodes with degree at most `d`.
pub fn low_degree_pairs(g: &Graph, d: usize) -> Vec<(NodeId, NodeId)> {
    let low: Vec<NodeId> = g.nodes().filter(|&v| g.degree(v) <= d).collect();
    let mut pairs = Vec::new();
    for &i in &low {
        for &j in &low {
            if i != j && !g.has_edge(i, j) {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Empirically checks the single-move and pair-perturbation bounds on a
/// seeded set of partitions, and certifies the degeneracy lower bound by
/// enumeration at the proof threshold when the graph is small enough.
pub fn verify_sparse_bounds(g: &Graph, d: usize, opts: &BoundsOptions) -> Result<BoundsReport> {
    if g.edge_count() == 0 {
        return Err(Error::UndefinedModularity);
    }
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut partitions = vec![Partition::all_in_one(n), Partition::singletons(n)];
    partitions.extend((0..opts.partitions).map(|_| random_partition(&mut rng, n)));

    let pairs = low_degree_pairs(g, d);
    let mut single_move = BoundCheck::default();
    let mut pair_perturbation = BoundCheck::default();
    for p in &partitions {
        check_single_moves(g, p, d, &mut single_move);
        let chosen: Vec<&(NodeId, NodeId)> = if pairs.len() > opts.max_pairs_per_partition {
            pairs.choose_multiple(&mut rng, opts.max_pairs_per_partition).collect()
        } else {
            pairs.iter().collect()
        };
        for &(i, j) in chosen {
            check_pair(g, p, d, i, j, &mut pair_perturbation);
        }
    }

    let degeneracy = if n <= MAX_ENUMERATION_NODES {
        let (_, proof) = thresholds(d, g.edge_count(), g.average_degree());
        // d = 0 gives a zero threshold; count the optimum itself
        Some(enumerate_degeneracy(g, proof.max(f64::MIN_POSITIVE), d)?)
    } else {
        None
    };
    Ok(BoundsReport {
        d,
        partitions_tested: partitions.len(),
        single_move,
        pair_perturbation,
        degeneracy,
    })
}
