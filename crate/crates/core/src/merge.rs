//! Post-processing that folds size-2 leaf clusters into their neighbors.
//!
//! Eligible small clusters are processed one at a time, most connected
//! first. A small cluster with neighbors in the large-cluster set joins the
//! large cluster it shares the most edges with; one without is promoted to
//! the large set unchanged (and may receive later merges).

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, NodeId};
use crate::hierarchy::{Cluster, ClusterId, ClusterKind, Hierarchy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MergeMode {
    /// Size-2 two-hop clusters only.
    #[serde(rename = "m2hc")]
    TwoHopOnly,
    /// Size-2 residual and two-hop clusters.
    #[serde(rename = "mrc")]
    ResidualAndTwoHop,
}

impl MergeMode {
    pub fn is_eligible(self, cluster: &Cluster) -> bool {
        cluster.is_leaf()
            && cluster.len() == 2
            && match self {
                MergeMode::TwoHopOnly => cluster.kind == ClusterKind::TwoHop,
                MergeMode::ResidualAndTwoHop => matches!(cluster.kind, ClusterKind::TwoHop | ClusterKind::Residual),
            }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MergeMode::TwoHopOnly => "m2hc",
            MergeMode::ResidualAndTwoHop => "mrc",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "outcome")]
pub enum MergeOutcome {
    Merged { host: ClusterId },
    Promoted,
}

/// One iteration of the merge loop, in processing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub small: ClusterId,
    /// Distinct neighbors the small cluster had inside the large set when picked.
    pub neighbors_in_large: usize,
    #[serde(flatten)]
    pub outcome: MergeOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub mode: MergeMode,
    pub events: Vec<MergeEvent>,
    /// Small cluster id to host id.
    pub merged: Vec<(ClusterId, ClusterId)>,
    pub promoted: Vec<ClusterId>,
    /// Internal clusters removed because every child was merged away.
    pub pruned: Vec<ClusterId>,
    pub clusters_before: usize,
    pub clusters_after: usize,
}

struct State<'a> {
    g: &'a Graph,
    h: Hierarchy,
    /// Large clusters holding each node.
    large_of: Vec<Vec<ClusterId>>,
    /// Pending small clusters holding each node.
    small_of: Vec<Vec<ClusterId>>,
    pending: BTreeSet<ClusterId>,
    score: HashMap<ClusterId, usize>,
    queue: BTreeSet<(Reverse<usize>, ClusterId)>,
}

impl State<'_> {
    fn members(&self, id: ClusterId) -> &[NodeId] {
        &self.h.clusters[&id].members
    }

    fn neighbors_in_large(&self, id: ClusterId) -> usize {
        let members = self.members(id);
        let mut seen = BTreeSet::new();
        for &x in members {
            for &y in self.g.neighbors(x) {
                if members.binary_search(&y).is_err() && !self.large_of[y].is_empty() {
                    seen.insert(y);
                }
            }
        }
        seen.len()
    }

    fn rescore(&mut self, id: ClusterId) {
        let new = self.neighbors_in_large(id);
        if let Some(old) = self.score.insert(id, new) {
            self.queue.remove(&(Reverse(old), id));
        }
        self.queue.insert((Reverse(new), id));
    }

    fn best_host(&self, id: ClusterId) -> Option<ClusterId> {
        let members = self.members(id);
        let mut edges: BTreeMap<ClusterId, usize> = BTreeMap::new();
        for &x in members {
            for &y in self.g.neighbors(x) {
                if members.binary_search(&y).is_err() {
                    for &l in &self.large_of[y] {
                        *edges.entry(l).or_insert(0) += 1;
                    }
                }
            }
        }
        edges
            .into_iter()
            .fold(None, |best: Option<(ClusterId, usize)>, (l, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((l, c)),
            })
            .map(|(l, _)| l)
    }
}

/// Removes clusters that had children in `original` but lost all of them,
/// repeating upwards. Their nodes already live in the hosts.
fn prune_emptied(h: &mut Hierarchy, original: &Hierarchy) -> Vec<ClusterId> {
    let mut pruned = Vec::new();
    loop {
        let emptied: Vec<ClusterId> = h
            .clusters
            .values()
            .filter(|c| {
                c.children.is_empty() && c.parent.is_some() && original.cluster(c.id).is_some_and(|o| !o.is_leaf())
            })
            .map(|c| c.id)
            .collect();
        if emptied.is_empty() {
            break;
        }
        for id in emptied {
            h.clusters.remove(&id);
            pruned.push(id);
        }
        h.relink().expect("pruning only removes leaves");
    }
    pruned.sort_unstable();
    pruned
}

/// Runs one merge pass over a copy of `h`.
pub fn merge_small_clusters(g: &Graph, h: &Hierarchy, mode: MergeMode) -> (Hierarchy, MergeReport) {
    let n = g.node_count();
    let mut large_of = vec![Vec::new(); n];
    let mut small_of = vec![Vec::new(); n];
    let mut pending = BTreeSet::new();
    for c in h.clusters() {
        if mode.is_eligible(c) {
            pending.insert(c.id);
            for &v in &c.members {
                small_of[v].push(c.id);
            }
        } else if c.is_leaf() {
            for &v in &c.members {
                large_of[v].push(c.id);
            }
        }
    }

    let clusters_before = h.len();
    let mut state = State {
        g,
        h: h.clone(),
        large_of,
        small_of,
        pending: pending.clone(),
        score: HashMap::new(),
        queue: BTreeSet::new(),
    };
    for &id in &pending {
        state.rescore(id);
    }

    let mut events = Vec::new();
    let mut merged = Vec::new();
    let mut promoted = Vec::new();
    while let Some((Reverse(neighbors), small)) = state.queue.pop_first() {
        state.pending.remove(&small);
        state.score.remove(&small);
        let members = state.members(small).to_vec();
        for &v in &members {
            state.small_of[v].retain(|&s| s != small);
        }

        let outcome = match state.best_host(small) {
            Some(host) => {
                let removed = state.h.clusters.remove(&small).expect("pending cluster exists");
                let target = state.h.clusters.get_mut(&host).expect("host exists");
                for &v in &removed.members {
                    if target.add_member(v) {
                        if let Err(pos) = target.merged.binary_search(&v) {
                            target.merged.insert(pos, v);
                        }
                    }
                    if !state.large_of[v].contains(&host) {
                        state.large_of[v].push(host);
                    }
                }
                for &v in &removed.attached {
                    state.h.attached.insert(v, host);
                }
                merged.push((small, host));
                MergeOutcome::Merged { host }
            }
            None => {
                for &v in &members {
                    state.large_of[v].push(small);
                }
                promoted.push(small);
                MergeOutcome::Promoted
            }
        };
        events.push(MergeEvent {
            small,
            neighbors_in_large: neighbors,
            outcome,
        });

        // these nodes are now covered by the large set
        let mut touched = BTreeSet::new();
        for &v in &members {
            touched.extend(state.small_of[v].iter().copied());
            for &y in g.neighbors(v) {
                touched.extend(state.small_of[y].iter().copied());
            }
        }
        for id in touched {
            if state.pending.contains(&id) {
                state.rescore(id);
            }
        }
    }

    let mut result = state.h;
    result.relink().expect("merging only removes leaves");
    let pruned = prune_emptied(&mut result, h);
    let report = MergeReport {
        mode,
        events,
        merged,
        promoted,
        pruned,
        clusters_before,
        clusters_after: result.len(),
    };
    (result, report)
}
