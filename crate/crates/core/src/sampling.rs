//! Token accounting and round-robin token-constrained edge selection.

use std::collections::{HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::hierarchy::{ClusterId, Hierarchy};

/// Default context window used to derive the maximum cluster size.
pub const DEFAULT_TOKEN_LIMIT: u64 = 8000;
/// Default tokens charged per edge on top of its endpoint descriptions.
pub const DEFAULT_RELATION_OVERHEAD: u64 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenMode {
    /// Use explicit `tokens` counts when present, estimate from text otherwise.
    Explicit,
    /// Always estimate from text.
    Estimated,
}

/// Deterministic character-based token estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenModel {
    pub mode: TokenMode,
    pub chars_per_token: f64,
}

impl Default for TokenModel {
    fn default() -> Self {
        Self {
            mode: TokenMode::Explicit,
            chars_per_token: 4.0,
        }
    }
}

impl TokenModel {
    pub fn new(mode: TokenMode, chars_per_token: f64) -> Result<Self> {
        if !(chars_per_token.is_finite() && chars_per_token > 0.0) {
            return Err(Error::config(format!(
                "chars per token must be positive, got {chars_per_token}"
            )));
        }
        Ok(Self { mode, chars_per_token })
    }

    /// `ceil(chars / chars_per_token)`; zero for empty text.
    pub fn estimate(&self, text: &str) -> u64 {
        let chars = text.chars().count();
        if chars == 0 {
            return 0;
        }
        ((chars as f64 / self.chars_per_token).ceil() as u64).max(1)
    }

    /// Token count for a node record given its optional explicit count and text.
    pub fn node_tokens(&self, explicit: Option<u64>, text: Option<&str>) -> u64 {
        match (self.mode, explicit) {
            (TokenMode::Explicit, Some(t)) => t,
            _ => text.map_or(0, |t| self.estimate(t)),
        }
    }
}

/// `max(2, floor(token_limit / mean node tokens))`, in exact integer arithmetic.
pub fn derive_max_cluster_size(token_limit: u64, g: &Graph) -> Result<usize> {
    if token_limit == 0 {
        return Err(Error::config("token limit must be at least 1"));
    }
    if g.is_empty() {
        return Err(Error::EmptyInput);
    }
    let total = g.total_tokens();
    if total == 0 {
        return Err(Error::config(
            "every node has zero tokens; cannot derive a max cluster size",
        ));
    }
    // limit / (total / n) == limit * n / total
    let size = (token_limit as u128 * g.node_count() as u128) / total as u128;
    Ok(size.max(2).min(usize::MAX as u128) as usize)
}

fn key(u: NodeId, v: NodeId) -> (NodeId, NodeId) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Token cost per undirected edge.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeCosts {
    costs: HashMap<(NodeId, NodeId), u64>,
}

impl EdgeCosts {
    /// `tokens(u) + tokens(v) + overhead` for every edge of `g`.
    pub fn from_node_tokens(g: &Graph, relation_overhead: u64) -> Self {
        let costs = g
            .edges()
            .map(|(u, v)| ((u, v), g.token_count(u) + g.token_count(v) + relation_overhead))
            .collect();
        Self { costs }
    }

    pub fn insert(&mut self, u: NodeId, v: NodeId, cost: u64) {
        self.costs.insert(key(u, v), cost);
    }

    pub fn get(&self, u: NodeId, v: NodeId) -> Option<u64> {
        self.costs.get(&key(u, v)).copied()
    }

    pub fn len(&self) -> usize {
        self.costs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.costs.is_empty()
    }
}

/// Orders edges by endpoint degree sum descending, then by smaller
/// endpoint, then by larger endpoint.
pub fn rank_edges(g: &Graph, edges: &mut [(NodeId, NodeId)]) {
    edges.sort_by(|&(a, b), &(c, d)| {
        let da = g.degree(a) + g.degree(b);
        let dc = g.degree(c) + g.degree(d);
        dc.cmp(&da).then(a.min(b).cmp(&c.min(d))).then(a.max(b).cmp(&c.max(d)))
    });
}

/// Leaf communities in visiting order (level descending, id ascending), each
/// with its intra-community edges in rank order.
pub fn ranked_community_edges(h: &Hierarchy, g: &Graph) -> Vec<(ClusterId, Vec<(NodeId, NodeId)>)> {
    let mut leaves: Vec<_> = h.leaves().collect();
    leaves.sort_by(|a, b| b.level.cmp(&a.level).then(a.id.cmp(&b.id)));
    leaves
        .into_iter()
        .map(|leaf| {
            let mut edges: Vec<(NodeId, NodeId)> = leaf
                .members
                .iter()
                .flat_map(|&u| {
                    g.neighbors(u)
                        .iter()
                        .filter(move |&&v| u < v && leaf.contains(v))
                        .map(move |&v| (u, v))
                })
                .collect();
            rank_edges(g, &mut edges);
            (leaf.id, edges)
        })
        .collect()
}

/// Token budget equal to the summed cost of the top `fraction` of all
/// ranked edges (`floor(fraction * m)` edges).
pub fn edge_fraction_budget(g: &Graph, costs: &EdgeCosts, fraction: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::config(format!(
            "edge fraction must be in [0, 1], got {fraction}"
        )));
    }
    let mut edges: Vec<(NodeId, NodeId)> = g.edges().collect();
    rank_edges(g, &mut edges);
    let take = (fraction * edges.len() as f64).floor() as usize;
    edges[..take].iter().map(|&(u, v)| cost_of(g, costs, u, v)).sum()
}

fn cost_of(g: &Graph, costs: &EdgeCosts, u: NodeId, v: NodeId) -> Result<u64> {
    costs
        .get(u, v)
        .ok_or_else(|| Error::MissingEdgeCost(g.external_id(u).to_string(), g.external_id(v).to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetireReason {
    /// The community's next edge cost more than the remaining budget.
    Unaffordable,
    /// Every edge of the community was selected (or it had none).
    Exhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectedEdge {
    pub u: NodeId,
    pub v: NodeId,
    pub community: ClusterId,
    pub cost: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleResult {
    /// Selected edges in selection order.
    pub selected: Vec<SelectedEdge>,
    pub total_tokens: u64,
    pub budget: u64,
    /// Communities in the order they were retired.
    pub retired: Vec<(ClusterId, RetireReason)>,
}

impl SampleResult {
    pub fn remaining(&self) -> u64 {
        self.budget - self.total_tokens
    }

    /// Selected edges of one community, in selection order.
    pub fn community_edges(&self, community: ClusterId) -> Vec<(NodeId, NodeId)> {
        self.selected
            .iter()
            .filter(|e| e.community == community)
            .map(|e| (e.u, e.v))
            .collect()
    }
}

/// Community, its ranked edges, and the index of its next edge.
type ActiveCommunity = (ClusterId, Vec<(NodeId, NodeId)>, usize);

/// Round-robin token-constrained selection over the leaf communities of `h`.
///
/// Communities are visited cyclically in [`ranked_community_edges`] order,
/// taking the next ranked edge on each visit. A community whose next edge
/// does not fit the remaining budget is retired and skipped from then on.
pub fn rrtc_sample(h: &Hierarchy, g: &Graph, costs: &EdgeCosts, budget: u64) -> Result<SampleResult> {
    let ranked = ranked_community_edges(h, g);
    let mut selected = Vec::new();
    let mut retired = Vec::new();
    let mut remaining = budget;

    let mut active: VecDeque<ActiveCommunity> = VecDeque::new();
    for (id, edges) in ranked {
        if edges.is_empty() {
            retired.push((id, RetireReason::Exhausted));
        } else {
            active.push_back((id, edges, 0));
        }
    }

    while let Some((id, edges, next)) = active.pop_front() {
        let (u, v) = edges[next];
        let cost = cost_of(g, costs, u, v)?;
        if cost > remaining {
            retired.push((id, RetireReason::Unaffordable));
            continue;
        }
        remaining -= cost;
        selected.push(SelectedEdge {
            u,
            v,
            community: id,
            cost,
        });
        if next + 1 == edges.len() {
            retired.push((id, RetireReason::Exhausted));
        } else {
            active.push_back((id, edges, next + 1));
        }
    }

    Ok(SampleResult {
        selected,
        total_tokens: budget - remaining,
        budget,
        retired,
    })
}
