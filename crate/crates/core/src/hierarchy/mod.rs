//! Residual-aware k-core hierarchy.
//!
//! The hierarchy is built level by level. At level `l` every queued cluster
//! is divided into its core part (`c(v) >= l`) and its residual part. Core
//! components become child clusters and are queued for the next level;
//! residual components become leaves. Components above the size limit are
//! split. Singletons produced at a level are pooled, grouped by the 2-hop
//! relation, and whatever is left alone is attached to a neighboring leaf
//! once every level is done.

mod split;
mod two_hop;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use split::split_component;
pub use two_hop::{split_two_hop, two_hop_clusters, two_hop_groups, TwoHopCluster};

use crate::decomposition::{core_numbers, CoreDecomposition};
use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId, NodeMarks};

pub type ClusterId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterKind {
    Core,
    Residual,
    TwoHop,
    Root,
}

impl ClusterKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ClusterKind::Core => "core",
            ClusterKind::Residual => "residual",
            ClusterKind::TwoHop => "two_hop",
            ClusterKind::Root => "root",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cluster {
    pub id: ClusterId,
    pub level: usize,
    pub kind: ClusterKind,
    pub parent: Option<ClusterId>,
    pub children: Vec<ClusterId>,
    /// Every node in the cluster, sorted.
    pub members: Vec<NodeId>,
    /// Shared anchors added by 2-hop splitting (subset of `members`).
    pub anchors: Vec<NodeId>,
    /// Global singletons attached after construction (subset of `members`).
    pub attached: Vec<NodeId>,
    /// Nodes absorbed from merged small clusters (subset of `members`).
    pub merged: Vec<NodeId>,
}

impl Cluster {
    pub(crate) fn new(
        id: ClusterId,
        level: usize,
        kind: ClusterKind,
        parent: Option<ClusterId>,
        members: Vec<NodeId>,
    ) -> Self {
        Self {
            id,
            level,
            kind,
            parent,
            children: Vec::new(),
            members,
            anchors: Vec::new(),
            attached: Vec::new(),
            merged: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    pub fn contains(&self, v: NodeId) -> bool {
        self.members.binary_search(&v).is_ok()
    }

    /// Members the cluster was formed from, i.e. without anchors, attached
    /// singletons or merged-in nodes.
    pub fn own_members(&self) -> Vec<NodeId> {
        self.members
            .iter()
            .copied()
            .filter(|v| {
                self.anchors.binary_search(v).is_err()
                    && self.attached.binary_search(v).is_err()
                    && self.merged.binary_search(v).is_err()
            })
            .collect()
    }

    /// Members that must also belong to the parent: everything except
    /// attached singletons and merged-in nodes.
    pub fn nested_members(&self) -> Vec<NodeId> {
        self.members
            .iter()
            .copied()
            .filter(|v| self.attached.binary_search(v).is_err() && self.merged.binary_search(v).is_err())
            .collect()
    }

    pub(crate) fn add_member(&mut self, v: NodeId) -> bool {
        match self.members.binary_search(&v) {
            Ok(_) => false,
            Err(pos) => {
                self.members.insert(pos, v);
                true
            }
        }
    }
}

fn insert_sorted(list: &mut Vec<NodeId>, v: NodeId) {
    if let Err(pos) = list.binary_search(&v) {
        list.insert(pos, v);
    }
}

/// Cluster tree plus the bookkeeping of singleton attachment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hierarchy {
    pub(crate) clusters: BTreeMap<ClusterId, Cluster>,
    pub(crate) roots: Vec<ClusterId>,
    pub(crate) global_singletons: Vec<NodeId>,
    pub(crate) attached: BTreeMap<NodeId, ClusterId>,
    pub(crate) max_cluster_size: usize,
}

impl Hierarchy {
    pub(crate) fn from_parts(
        clusters: Vec<Cluster>,
        global_singletons: Vec<NodeId>,
        attached: BTreeMap<NodeId, ClusterId>,
        max_cluster_size: usize,
    ) -> Result<Self> {
        let mut map = BTreeMap::new();
        for c in clusters {
            if map.insert(c.id, c).is_some() {
                return Err(Error::InvalidHierarchy("duplicate cluster id".into()));
            }
        }
        let mut h = Hierarchy {
            clusters: map,
            roots: Vec::new(),
            global_singletons,
            attached,
            max_cluster_size,
        };
        h.relink()?;
        Ok(h)
    }

    /// Rebuilds child lists and roots from parent pointers.
    pub(crate) fn relink(&mut self) -> Result<()> {
        let mut children: BTreeMap<ClusterId, Vec<ClusterId>> = BTreeMap::new();
        let mut roots = Vec::new();
        for c in self.clusters.values() {
            match c.parent {
                Some(p) => {
                    if !self.clusters.contains_key(&p) {
                        return Err(Error::InvalidHierarchy(format!(
                            "cluster {} has unknown parent {p}",
                            c.id
                        )));
                    }
                    children.entry(p).or_default().push(c.id);
                }
                None => roots.push(c.id),
            }
        }
        for c in self.clusters.values_mut() {
            c.children = children.remove(&c.id).unwrap_or_default();
        }
        self.roots = roots;
        Ok(())
    }

    /// All clusters in id order.
    pub fn clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.values()
    }

    pub fn cluster(&self, id: ClusterId) -> Option<&Cluster> {
        self.clusters.get(&id)
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn roots(&self) -> &[ClusterId] {
        &self.roots
    }

    /// Clusters without children, in id order.
    pub fn leaves(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.values().filter(|c| c.is_leaf())
    }

    pub fn max_level(&self) -> usize {
        self.clusters.values().map(|c| c.level).max().unwrap_or(0)
    }

    /// Singletons left unattached (empty after a successful build).
    pub fn global_singletons(&self) -> &[NodeId] {
        &self.global_singletons
    }

    /// Attached singleton to the leaf it joined.
    pub fn attached_singletons(&self) -> &BTreeMap<NodeId, ClusterId> {
        &self.attached
    }

    pub fn max_cluster_size(&self) -> usize {
        self.max_cluster_size
    }
}

/// Builds the hierarchy over `g`, which should already be the largest
/// connected component without self-loops.
pub fn build_hierarchy(g: &Graph, max_cluster_size: usize) -> Result<Hierarchy> {
    let cores = core_numbers(g);
    build_hierarchy_with_cores(g, &cores, max_cluster_size)
}

/// Same as [`build_hierarchy`] with a precomputed decomposition of `g`.
pub fn build_hierarchy_with_cores(g: &Graph, cores: &CoreDecomposition, max_cluster_size: usize) -> Result<Hierarchy> {
    if max_cluster_size < 2 {
        return Err(Error::config(format!(
            "max cluster size must be at least 2, got {max_cluster_size}"
        )));
    }
    if g.is_empty() {
        return Err(Error::EmptyInput);
    }
    if cores.cores().len() != g.node_count() {
        return Err(Error::config("core decomposition does not match the graph"));
    }
    Builder::new(g, cores, max_cluster_size).run()
}

struct Builder<'a> {
    g: &'a Graph,
    cores: &'a CoreDecomposition,
    max_size: usize,
    clusters: Vec<Cluster>,
    depth: Vec<usize>,
    /// Deepest queued cluster containing each node.
    home: Vec<ClusterId>,
    global: Vec<NodeId>,
    marks: NodeMarks,
}

impl<'a> Builder<'a> {
    fn new(g: &'a Graph, cores: &'a CoreDecomposition, max_size: usize) -> Self {
        Self {
            g,
            cores,
            max_size,
            clusters: Vec::new(),
            depth: Vec::new(),
            home: Vec::new(),
            global: Vec::new(),
            marks: NodeMarks::new(g.node_count()),
        }
    }

    fn push(&mut self, level: usize, kind: ClusterKind, parent: Option<ClusterId>, members: Vec<NodeId>) -> ClusterId {
        let id = self.clusters.len();
        self.depth.push(parent.map_or(0, |p| self.depth[p] + 1));
        self.clusters.push(Cluster::new(id, level, kind, parent, members));
        id
    }

    fn pieces(&self, component: Vec<NodeId>) -> Vec<Vec<NodeId>> {
        if component.len() <= self.max_size {
            vec![component]
        } else {
            split_component(self.g, &component, self.max_size)
        }
    }

    fn run(mut self) -> Result<Hierarchy> {
        let n = self.g.node_count();
        let all: Vec<NodeId> = (0..n).collect();
        let root = self.push(1, ClusterKind::Root, None, all.clone());
        self.home = vec![root; n];

        let mut queue = Vec::new();
        if n <= self.max_size {
            queue.push(root);
        } else {
            let mut pool = Vec::new();
            let mut created = Vec::new();
            for piece in split_component(self.g, &all, self.max_size) {
                if piece.len() == 1 {
                    pool.push(piece[0]);
                } else {
                    let id = self.push(1, ClusterKind::Core, Some(root), piece);
                    created.push(id);
                }
            }
            self.pool_singletons(pool, 1);
            self.rehome(&created);
            queue = created;
        }

        for level in 2..=self.cores.max_core() {
            let mut next = Vec::new();
            let mut created = Vec::new();
            let mut pool = Vec::new();
            for &s in &queue {
                let members = self.clusters[s].members.clone();
                let (core_part, residual_part): (Vec<NodeId>, Vec<NodeId>) =
                    members.iter().partition(|&&v| self.cores.core(v) >= level);

                for component in self.g.components_within(&core_part, &mut self.marks) {
                    if component.len() == members.len() {
                        // same members as the parent: keep one cluster, deepest level
                        self.clusters[s].level = level;
                        next.push(s);
                        continue;
                    }
                    for piece in self.pieces(component) {
                        if piece.len() == 1 {
                            pool.push(piece[0]);
                        } else {
                            let id = self.push(level, ClusterKind::Core, Some(s), piece);
                            next.push(id);
                            created.push(id);
                        }
                    }
                }

                for component in self.g.components_within(&residual_part, &mut self.marks) {
                    if component.len() == members.len() {
                        // nothing reaches this level: the parent is already the leaf
                        continue;
                    }
                    for piece in self.pieces(component) {
                        if piece.len() == 1 {
                            pool.push(piece[0]);
                        } else {
                            self.push(level, ClusterKind::Residual, Some(s), piece);
                        }
                    }
                }
            }
            self.pool_singletons(pool, level);
            self.rehome(&created);
            queue = next;
        }

        let mut h = Hierarchy::from_parts(self.clusters, Vec::new(), BTreeMap::new(), self.max_size)?;
        attach_singletons(self.g, &mut h, self.global);
        Ok(h)
    }

    fn rehome(&mut self, created: &[ClusterId]) {
        for &id in created {
            for i in 0..self.clusters[id].members.len() {
                let v = self.clusters[id].members[i];
                self.home[v] = id;
            }
        }
    }

    fn lowest_common_ancestor(&self, nodes: &[NodeId]) -> ClusterId {
        let mut iter = nodes.iter().map(|&v| self.home[v]);
        let mut acc = iter.next().expect("non-empty node set");
        for mut other in iter {
            let mut a = acc;
            while self.depth[a] > self.depth[other] {
                a = self.clusters[a].parent.expect("deeper cluster has a parent");
            }
            while self.depth[other] > self.depth[a] {
                other = self.clusters[other].parent.expect("deeper cluster has a parent");
            }
            while a != other {
                a = self.clusters[a].parent.expect("clusters share the root");
                other = self.clusters[other].parent.expect("clusters share the root");
            }
            acc = a;
        }
        acc
    }

    fn pool_singletons(&mut self, pool: Vec<NodeId>, level: usize) {
        for group in two_hop_groups(self.g, &pool) {
            if group.len() == 1 {
                self.global.push(group[0]);
                continue;
            }
            for cluster in two_hop_clusters(self.g, &group, self.max_size) {
                let all = cluster.all_nodes();
                let parent = self.lowest_common_ancestor(&all);
                let id = self.push(level, ClusterKind::TwoHop, Some(parent), all);
                self.clusters[id].anchors = cluster.anchors;
            }
        }
    }
}

/// Attaches each global singleton to the leaf holding most of its neighbors
/// (ties by smallest cluster id). Singletons whose neighbors are themselves
/// unattached wait for a later pass.
fn attach_singletons(g: &Graph, h: &mut Hierarchy, mut pending: Vec<NodeId>) {
    pending.sort_unstable();
    pending.dedup();
    let mut leaves_of: Vec<Vec<ClusterId>> = vec![Vec::new(); g.node_count()];
    for leaf in h.leaves() {
        for &v in &leaf.members {
            leaves_of[v].push(leaf.id);
        }
    }
    // a pooled node may since have been pulled into a leaf as an anchor
    pending.retain(|&v| leaves_of[v].is_empty());
    loop {
        let mut waiting = Vec::new();
        for &v in &pending {
            let mut counts: BTreeMap<ClusterId, usize> = BTreeMap::new();
            for &w in g.neighbors(v) {
                for &leaf in &leaves_of[w] {
                    *counts.entry(leaf).or_insert(0) += 1;
                }
            }
            // BTreeMap iterates ids ascending, so the first maximum is the smallest id
            let best = counts
                .into_iter()
                .fold(None, |best: Option<(ClusterId, usize)>, (id, c)| match best {
                    Some((_, bc)) if bc >= c => best,
                    _ => Some((id, c)),
                });
            match best {
                Some((leaf, _)) => {
                    let cluster = h.clusters.get_mut(&leaf).expect("leaf exists");
                    cluster.add_member(v);
                    insert_sorted(&mut cluster.attached, v);
                    leaves_of[v].push(leaf);
                    h.attached.insert(v, leaf);
                }
                None => waiting.push(v),
            }
        }
        if waiting.is_empty() || waiting.len() == pending.len() {
            pending = waiting;
            break;
        }
        pending = waiting;
    }
    h.global_singletons = pending;
}
