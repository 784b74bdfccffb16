use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use petgraph::unionfind::UnionFind;

use super::split::Frontier;
use crate::graph::{Graph, NodeId};

/// A cluster emitted from a 2-hop group: the group members it took, plus the
/// shared anchors (neighbors outside the group) pulled in alongside them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoHopCluster {
    pub members: Vec<NodeId>,
    pub anchors: Vec<NodeId>,
}

impl TwoHopCluster {
    /// Members and anchors together, sorted.
    pub fn all_nodes(&self) -> Vec<NodeId> {
        let mut all: Vec<NodeId> = self.members.iter().chain(&self.anchors).copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }
}

/// Groups `pool` by the 2-hop relation: two pooled nodes are linked when they
/// are adjacent or share at least one neighbor in `g`. Groups are sorted and
/// ordered by smallest member; size-1 groups are included.
pub fn two_hop_groups(g: &Graph, pool: &[NodeId]) -> Vec<Vec<NodeId>> {
    let mut pool: Vec<NodeId> = pool.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let index: HashMap<NodeId, usize> = pool.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::<usize>::new(pool.len());

    // hub -> first pooled neighbor seen through it
    let mut via: HashMap<NodeId, usize> = HashMap::new();
    for (i, &u) in pool.iter().enumerate() {
        for &w in g.neighbors(u) {
            if let Some(&j) = index.get(&w) {
                uf.union(i, j);
            }
            match via.get(&w) {
                Some(&j) => {
                    uf.union(i, j);
                }
                None => {
                    via.insert(w, i);
                }
            }
        }
    }

    let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (i, &v) in pool.iter().enumerate() {
        groups.entry(uf.find(i)).or_default().push(v);
    }
    let mut groups: Vec<Vec<NodeId>> = groups.into_values().collect();
    groups.sort_by_key(|group| group[0]);
    groups
}

/// Splits a 2-hop group into clusters of at most `max_size` group members.
///
/// Anchors are the neighbors of group members that lie outside the group.
/// Each cluster is seeded by the remaining member with the most anchors and
/// grown by the frontier member maximizing the summed anchor overlap with
/// the cluster. Anchors linked to at least two members of a finished cluster
/// are emitted with it. Ties go to the smallest id throughout.
pub fn split_two_hop(g: &Graph, group: &[NodeId], max_size: usize) -> Vec<TwoHopCluster> {
    let max_size = max_size.max(1);
    let mut group: Vec<NodeId> = group.to_vec();
    group.sort_unstable();
    group.dedup();
    let in_group: BTreeSet<NodeId> = group.iter().copied().collect();

    let anchor_sets: HashMap<NodeId, Vec<NodeId>> = group
        .iter()
        .map(|&u| {
            let anchors = g
                .neighbors(u)
                .iter()
                .copied()
                .filter(|w| !in_group.contains(w))
                .collect();
            (u, anchors)
        })
        .collect();
    let mut linked: HashMap<NodeId, Vec<NodeId>> = HashMap::new();
    for &u in &group {
        for &a in &anchor_sets[&u] {
            linked.entry(a).or_default().push(u);
        }
    }

    let mut remaining: HashMap<NodeId, bool> = group.iter().map(|&u| (u, true)).collect();
    let mut left = group.len();
    let mut seeds = group.clone();
    seeds.sort_by_key(|u| (Reverse(anchor_sets[u].len()), *u));
    let mut next_seed = 0;

    let mut clusters = Vec::new();
    while left > 0 {
        while !remaining[&seeds[next_seed]] {
            next_seed += 1;
        }
        let seed = seeds[next_seed];
        let mut members = vec![seed];
        let mut frontier = Frontier::new();

        let take = |v: NodeId, frontier: &mut Frontier, remaining: &mut HashMap<NodeId, bool>| {
            remaining.insert(v, false);
            for a in &anchor_sets[&v] {
                for u in &linked[a] {
                    if remaining[u] {
                        frontier.bump(*u);
                    }
                }
            }
        };
        take(seed, &mut frontier, &mut remaining);
        left -= 1;
        while members.len() < max_size {
            let Some(v) = frontier.pop_best(|u| remaining[&u]) else {
                break;
            };
            members.push(v);
            take(v, &mut frontier, &mut remaining);
            left -= 1;
        }

        let mut links: BTreeMap<NodeId, usize> = BTreeMap::new();
        for v in &members {
            for &a in &anchor_sets[v] {
                *links.entry(a).or_insert(0) += 1;
            }
        }
        let anchors = links.into_iter().filter(|&(_, c)| c >= 2).map(|(a, _)| a).collect();
        members.sort_unstable();
        clusters.push(TwoHopCluster { members, anchors });
    }
    clusters
}

/// Turns one 2-hop group into clusters: groups within `max_size` are taken
/// as they are (no anchors), larger ones go through [`split_two_hop`].
pub fn two_hop_clusters(g: &Graph, group: &[NodeId], max_size: usize) -> Vec<TwoHopCluster> {
    if group.len() <= max_size {
        let mut members = group.to_vec();
        members.sort_unstable();
        vec![TwoHopCluster {
            members,
            anchors: Vec::new(),
        }]
    } else {
        split_two_hop(g, group, max_size)
    }
}
