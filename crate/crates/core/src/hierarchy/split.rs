use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::graph::{Graph, NodeId};

/// Greedy max-connectivity frontier: scores are pushed on every increment and
/// stale heap entries are skipped on pop.
pub(crate) struct Frontier {
    score: HashMap<NodeId, usize>,
    heap: BinaryHeap<(usize, Reverse<NodeId>)>,
}

impl Frontier {
    pub(crate) fn new() -> Self {
        Self {
            score: HashMap::new(),
            heap: BinaryHeap::new(),
        }
    }

    pub(crate) fn bump(&mut self, v: NodeId) {
        let s = self.score.entry(v).or_insert(0);
        *s += 1;
        self.heap.push((*s, Reverse(v)));
    }

    /// Highest score, ties by smallest id, among nodes still accepted by `alive`.
    pub(crate) fn pop_best(&mut self, alive: impl Fn(NodeId) -> bool) -> Option<NodeId> {
        while let Some((s, Reverse(v))) = self.heap.pop() {
            if alive(v) && self.score.get(&v) == Some(&s) {
                self.score.remove(&v);
                return Some(v);
            }
        }
        None
    }
}

/// Splits a connected node set into clusters of at most `max_size` nodes.
///
/// Each cluster is grown from the highest-degree remaining node (ties by
/// smallest id), repeatedly absorbing the frontier node with the most
/// neighbors already in the cluster. The frontier is every remaining node
/// adjacent to the cluster, so growth never strands reachable nodes. The
/// returned clusters partition `nodes`; each is sorted.
pub fn split_component(g: &Graph, nodes: &[NodeId], max_size: usize) -> Vec<Vec<NodeId>> {
    let mut sorted = nodes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() <= max_size.max(1) {
        return vec![sorted];
    }
    let max_size = max_size.max(1);

    let mut remaining = vec![false; g.node_count()];
    for &v in &sorted {
        remaining[v] = true;
    }
    let mut left = sorted.len();
    let mut seeds = sorted;
    seeds.sort_by_key(|&v| (Reverse(g.degree(v)), v));
    let mut next_seed = 0;

    let mut clusters = Vec::new();
    while left > 0 {
        while !remaining[seeds[next_seed]] {
            next_seed += 1;
        }
        let seed = seeds[next_seed];
        let mut cluster = vec![seed];
        remaining[seed] = false;
        left -= 1;
        let mut frontier = Frontier::new();
        for &w in g.neighbors(seed) {
            if remaining[w] {
                frontier.bump(w);
            }
        }
        while cluster.len() < max_size {
            let Some(v) = frontier.pop_best(|w| remaining[w]) else {
                break;
            };
            cluster.push(v);
            remaining[v] = false;
            left -= 1;
            for &w in g.neighbors(v) {
                if remaining[w] {
                    frontier.bump(w);
                }
            }
        }
        cluster.sort_unstable();
        clusters.push(cluster);
    }
    clusters
}
