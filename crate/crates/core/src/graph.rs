//! Simple undirected graph over dense node ids, plus the preprocessing
//! applied before clustering.
//!
//! Internal ids are assigned in lexicographic order of the external ids, so
//! every "smallest id" tie-break elsewhere in the crate is a tie-break on the
//! external id as well.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type NodeId = usize;

/// Per-node metadata carried through every stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeMeta {
    pub external_id: String,
    #[serde(default)]
    pub label: String,
    /// Tokens attributed to this node's textual description.
    #[serde(default)]
    pub token_count: u64,
}

impl NodeMeta {
    pub fn new(external_id: impl Into<String>, label: impl Into<String>, token_count: u64) -> Self {
        Self {
            external_id: external_id.into(),
            label: label.into(),
            token_count,
        }
    }

    pub fn bare(external_id: impl Into<String>) -> Self {
        Self::new(external_id, "", 0)
    }
}

/// Immutable simple undirected graph.
///
/// Self-loops are kept apart from the adjacency lists so that the handshake
/// identity `sum(degree) == 2 * edge_count` always holds for the simple part.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    /// CSR offsets: the neighbors of `v` are `targets[offsets[v]..offsets[v + 1]]`.
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
    meta: Vec<NodeMeta>,
    self_loops: Vec<NodeId>,
}

impl Graph {
    /// Builds a graph from already-resolved internal ids. `meta` must be
    /// sorted by external id; duplicate edges collapse, `(v, v)` pairs are
    /// recorded as self-loops.
    pub fn from_edges(meta: Vec<NodeMeta>, edges: impl IntoIterator<Item = (NodeId, NodeId)>) -> Self {
        let n = meta.len();
        let mut pairs = Vec::new();
        let mut self_loops = Vec::new();
        let mut counts = vec![0usize; n + 1];
        for (u, v) in edges {
            assert!(u < n && v < n, "edge ({u}, {v}) out of range for {n} nodes");
            if u == v {
                self_loops.push(u);
            } else {
                pairs.push((u, v));
                counts[u + 1] += 1;
                counts[v + 1] += 1;
            }
        }
        for i in 1..=n {
            counts[i] += counts[i - 1];
        }
        let mut fill = counts.clone();
        let mut raw = vec![0; counts[n]];
        for (u, v) in pairs {
            raw[fill[u]] = v;
            fill[u] += 1;
            raw[fill[v]] = u;
            fill[v] += 1;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut targets = Vec::with_capacity(raw.len());
        for v in 0..n {
            let list = &mut raw[counts[v]..counts[v + 1]];
            list.sort_unstable();
            let begin = targets.len();
            for &w in list.iter() {
                if targets.len() == begin || targets[targets.len() - 1] != w {
                    targets.push(w);
                }
            }
            offsets.push(targets.len());
        }
        self_loops.sort_unstable();
        self_loops.dedup();
        Self {
            offsets,
            targets,
            meta,
            self_loops,
        }
    }

    /// Convenience constructor for tests and fixtures: nodes are named by the
    /// given external ids (any order), edges reference those names.
    pub fn from_named_edges(nodes: &[&str], edges: &[(&str, &str)]) -> Result<Self> {
        let records = nodes.iter().map(|id| NodeMeta::bare(*id)).collect();
        let edges: Vec<(String, String)> = edges.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        load_graph(&edges, records)
    }

    pub fn node_count(&self) -> usize {
        self.meta.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn nodes(&self) -> std::ops::Range<NodeId> {
        0..self.node_count()
    }

    pub fn neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.offsets.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    /// Average degree `2m / n`.
    pub fn average_degree(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            2.0 * self.edge_count() as f64 / self.node_count() as f64
        }
    }

    pub fn meta(&self, v: NodeId) -> &NodeMeta {
        &self.meta[v]
    }

    pub fn all_meta(&self) -> &[NodeMeta] {
        &self.meta
    }

    pub fn external_id(&self, v: NodeId) -> &str {
        &self.meta[v].external_id
    }

    pub fn token_count(&self, v: NodeId) -> u64 {
        self.meta[v].token_count
    }

    pub fn total_tokens(&self) -> u64 {
        self.meta.iter().map(|m| m.token_count).sum()
    }

    /// Looks up the internal id of an external id.
    pub fn node_id(&self, external_id: &str) -> Option<NodeId> {
        self.meta
            .binary_search_by(|m| m.external_id.as_str().cmp(external_id))
            .ok()
    }

    /// Nodes carrying a self-loop in the input.
    pub fn self_loops(&self) -> &[NodeId] {
        &self.self_loops
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.neighbors(u).iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    /// Subgraph induced by `nodes`, with ids renumbered in ascending order of
    /// the old ids. Self-loops are dropped.
    pub fn induced_subgraph(&self, nodes: &[NodeId]) -> Graph {
        let mut keep: Vec<NodeId> = nodes.to_vec();
        keep.sort_unstable();
        keep.dedup();
        let mut remap = vec![usize::MAX; self.node_count()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let meta = keep.iter().map(|&v| self.meta[v].clone()).collect();
        let edges = keep.iter().flat_map(|&u| {
            let remap = &remap;
            self.neighbors(u)
                .iter()
                .filter(move |&&v| u < v && remap[v] != usize::MAX)
                .map(move |&v| (remap[u], remap[v]))
        });
        Graph::from_edges(meta, edges.collect::<Vec<_>>())
    }

    /// Connected components, each sorted ascending, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<Vec<NodeId>> {
        let all: Vec<NodeId> = self.nodes().collect();
        let mut marks = NodeMarks::new(self.node_count());
        self.components_within(&all, &mut marks)
    }

    /// Connected components of the subgraph induced by `nodes`, each sorted,
    /// ordered by smallest member.
    pub(crate) fn components_within(&self, nodes: &[NodeId], marks: &mut NodeMarks) -> Vec<Vec<NodeId>> {
        marks.clear();
        for &v in nodes {
            marks.set(v, 1);
        }
        let mut sorted = nodes.to_vec();
        sorted.sort_unstable();
        let mut components = Vec::new();
        let mut queue = VecDeque::new();
        for &start in &sorted {
            if marks.get(start) != 1 {
                continue;
            }
            marks.set(start, 2);
            queue.push_back(start);
            let mut component = Vec::new();
            while let Some(u) = queue.pop_front() {
                component.push(u);
                for &w in self.neighbors(u) {
                    if marks.get(w) == 1 {
                        marks.set(w, 2);
                        queue.push_back(w);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    /// Handshake check: `sum(degree) == 2m`.
    pub fn degree_sum(&self) -> usize {
        self.degrees().into_iter().sum()
    }
}

/// Reusable per-node scratch labels with O(1) reset.
#[derive(Debug, Clone)]
pub(crate) struct NodeMarks {
    stamp: Vec<u32>,
    value: Vec<u32>,
    epoch: u32,
}

impl NodeMarks {
    pub(crate) fn new(n: usize) -> Self {
        Self {
            stamp: vec![0; n],
            value: vec![0; n],
            epoch: 1,
        }
    }

    pub(crate) fn clear(&mut self) {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }

    pub(crate) fn get(&self, v: NodeId) -> u32 {
        if self.stamp[v] == self.epoch {
            self.value[v]
        } else {
            0
        }
    }

    pub(crate) fn set(&mut self, v: NodeId, value: u32) {
        self.stamp[v] = self.epoch;
        self.value[v] = value;
    }
}

/// Builds a graph from external-id edge records and node records.
///
/// Edge endpoints missing from `node_records` are registered with an empty
/// label and zero tokens. Internal ids follow lexicographic external-id order.
pub fn load_graph(edge_records: &[(String, String)], node_records: Vec<NodeMeta>) -> Result<Graph> {
    let mut by_id: BTreeMap<String, NodeMeta> = BTreeMap::new();
    for record in node_records {
        if by_id.contains_key(&record.external_id) {
            return Err(Error::DuplicateNode(record.external_id));
        }
        by_id.insert(record.external_id.clone(), record);
    }
    for (src, dst) in edge_records {
        for id in [src, dst] {
            if !by_id.contains_key(id) {
                by_id.insert(id.clone(), NodeMeta::bare(id.as_str()));
            }
        }
    }
    if by_id.is_empty() {
        return Err(Error::EmptyInput);
    }
    let index: BTreeMap<&str, NodeId> = by_id.keys().enumerate().map(|(i, k)| (k.as_str(), i)).collect();
    let edges: Vec<(NodeId, NodeId)> = edge_records
        .iter()
        .map(|(s, d)| (index[s.as_str()], index[d.as_str()]))
        .collect();
    drop(index);
    let meta: Vec<NodeMeta> = by_id.into_values().collect();
    Ok(Graph::from_edges(meta, edges))
}

/// Largest connected component with self-loops removed.
///
/// Ties on component size go to the component holding the smallest external
/// id. An empty graph is returned unchanged.
pub fn largest_connected_component(g: &Graph) -> Graph {
    let components = g.connected_components();
    // components are ordered by smallest member, so the first maximum wins ties
    let best = components
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
        .map(|(i, _)| i);
    match best {
        Some(i) => g.induced_subgraph(&components[i]),
        None => g.clone(),
    }
}
