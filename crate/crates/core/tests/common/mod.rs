//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashSet};

use kcore_graphrag::graph::{Graph, NodeId};
use kcore_graphrag::hierarchy::{ClusterKind, Hierarchy};
use kcore_graphrag::merge::{MergeMode, MergeOutcome, MergeReport};
use kcore_graphrag::sampling::{ranked_community_edges, EdgeCosts, RetireReason, SampleResult};
use kcore_graphrag::ClusterId;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Sixteen nodes a..p: the 2-core is f..p, the 3-core is the K4 on m..p,
/// and f..h, i..j, k..l hang off it as triangles.
pub const SIXTEEN_NODE_EDGES: &[(&str, &str)] = &[
    ("m", "n"),
    ("m", "o"),
    ("m", "p"),
    ("n", "o"),
    ("n", "p"),
    ("o", "p"),
    ("f", "g"),
    ("g", "h"),
    ("h", "f"),
    ("h", "o"),
    ("i", "j"),
    ("i", "m"),
    ("j", "m"),
    ("k", "l"),
    ("k", "n"),
    ("l", "n"),
    ("a", "b"),
    ("a", "f"),
    ("c", "i"),
    ("d", "i"),
    ("e", "f"),
];

pub fn sixteen_node_graph() -> Graph {
    Graph::from_named_edges(&[], SIXTEEN_NODE_EDGES).unwrap()
}

pub fn names(g: &Graph, nodes: &[NodeId]) -> String {
    let mut v: Vec<&str> = nodes.iter().map(|&n| g.external_id(n)).collect();
    v.sort_unstable();
    v.concat()
}

/// Erdos-Renyi style graph with `n` nodes and edge probability `p`.
pub fn random_graph(rng: &mut impl Rng, n: usize, p: f64) -> Graph {
    let width = n.to_string().len();
    let meta = (0..n)
        .map(|v| kcore_graphrag::NodeMeta::new(format!("v{v:0width$}"), "", rng.gen_range(1..50)))
        .collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(meta, edges)
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// For each k, delete nodes of degree < k until nothing changes; a node's
/// core number is the largest k it survives.
pub fn brute_force_cores(g: &Graph) -> Vec<usize> {
    let n = g.node_count();
    let mut core = vec![0; n];
    for k in 1.. {
        let mut alive: Vec<bool> = vec![true; n];
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] && g.neighbors(v).iter().filter(|&&w| alive[w]).count() < k {
                    alive[v] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if !alive.iter().any(|&a| a) {
            break;
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}

/// Checks every structural hierarchy invariant; returns the first failure.
pub fn check_hierarchy(g: &Graph, cores: &[usize], h: &Hierarchy) -> Result<(), String> {
    let m = h.max_cluster_size();
    if !h.global_singletons().is_empty() {
        return Err(format!("{} global singletons left", h.global_singletons().len()));
    }
    for c in h.clusters() {
        if c.members.is_empty() {
            return Err(format!("cluster {} is empty", c.id));
        }
        if c.kind != ClusterKind::Root && c.own_members().len() > m {
            return Err(format!(
                "cluster {} has {} own members > M = {m}",
                c.id,
                c.own_members().len()
            ));
        }
        if matches!(c.kind, ClusterKind::Residual | ClusterKind::TwoHop) && !c.is_leaf() {
            return Err(format!("{:?} cluster {} has children", c.kind, c.id));
        }
        if c.kind == ClusterKind::Core {
            if let Some(v) = c.own_members().into_iter().find(|&v| cores[v] < c.level) {
                return Err(format!(
                    "core cluster {} at level {} holds {} with c = {}",
                    c.id,
                    c.level,
                    g.external_id(v),
                    cores[v]
                ));
            }
        }
        if c.kind == ClusterKind::Residual {
            if let Some(v) = c.own_members().into_iter().find(|&v| cores[v] >= c.level) {
                return Err(format!(
                    "residual cluster {} at level {} holds {} with c = {}",
                    c.id,
                    c.level,
                    g.external_id(v),
                    cores[v]
                ));
            }
        }
        if let Some(p) = c.parent {
            let parent = h.cluster(p).ok_or(format!("cluster {} has missing parent {p}", c.id))?;
            if parent.level > c.level {
                return Err(format!("cluster {} is above its parent {p}", c.id));
            }
            if let Some(v) = c.nested_members().into_iter().find(|&v| !parent.contains(v)) {
                return Err(format!(
                    "cluster {} holds {} outside parent {p}",
                    c.id,
                    g.external_id(v)
                ));
            }
            if !parent.children.contains(&c.id) {
                return Err(format!("parent {p} does not list child {}", c.id));
            }
        }
    }
    let covered: HashSet<NodeId> = h.leaves().flat_map(|c| c.members.iter().copied()).collect();
    if covered.len() != g.node_count() {
        return Err(format!("leaves cover {} of {} nodes", covered.len(), g.node_count()));
    }
    for (&v, &c) in h.attached_singletons() {
        let leaf = h.cluster(c).ok_or("attachment to missing cluster")?;
        if !leaf.is_leaf() || !leaf.attached.contains(&v) {
            return Err(format!("{} not attached to leaf {c}", g.external_id(v)));
        }
    }
    Ok(())
}

fn leaf_nodes(h: &Hierarchy) -> Vec<NodeId> {
    let mut all: Vec<NodeId> = h.leaves().flat_map(|c| c.members.iter().copied()).collect();
    all.sort_unstable();
    all.dedup();
    all
}

/// Replays the merge loop from the report: at each step the chosen small
/// cluster must have the most neighbors in the current large set, its host
/// must share the most edges with it, and promotions must have no neighbor
/// in the large set. Also checks node conservation and the cluster count.
pub fn check_merge(g: &Graph, before: &Hierarchy, after: &Hierarchy, report: &MergeReport) -> Result<(), String> {
    let mode = report.mode;
    let mut clusters: BTreeMap<ClusterId, BTreeSet<NodeId>> = before
        .leaves()
        .map(|c| (c.id, c.members.iter().copied().collect()))
        .collect();
    let mut pending: BTreeSet<ClusterId> = before.leaves().filter(|c| mode.is_eligible(c)).map(|c| c.id).collect();
    let mut large: BTreeSet<ClusterId> = clusters.keys().copied().filter(|id| !pending.contains(id)).collect();

    let neighbors_in =
        |clusters: &BTreeMap<ClusterId, BTreeSet<NodeId>>, large: &BTreeSet<ClusterId>, small: ClusterId| {
            let own = &clusters[&small];
            let in_large: HashSet<NodeId> = large.iter().flat_map(|l| clusters[l].iter().copied()).collect();
            let mut seen = BTreeSet::new();
            for &u in own {
                for &w in g.neighbors(u) {
                    if !own.contains(&w) && in_large.contains(&w) {
                        seen.insert(w);
                    }
                }
            }
            seen.len()
        };
    let shared_edges = |clusters: &BTreeMap<ClusterId, BTreeSet<NodeId>>, small: ClusterId, host: ClusterId| {
        let own = &clusters[&small];
        own.iter()
            .flat_map(|&u| g.neighbors(u).iter().map(move |&w| (u, w)))
            .filter(|&(_, w)| !own.contains(&w) && clusters[&host].contains(&w))
            .count()
    };

    if report.events.len() != pending.len() {
        return Err(format!(
            "{} events for {} eligible clusters",
            report.events.len(),
            pending.len()
        ));
    }
    for event in &report.events {
        if !pending.contains(&event.small) {
            return Err(format!("cluster {} processed twice or not eligible", event.small));
        }
        let scores: BTreeMap<ClusterId, usize> = pending
            .iter()
            .map(|&s| (s, neighbors_in(&clusters, &large, s)))
            .collect();
        let best = scores
            .iter()
            .max_by_key(|(&id, &s)| (s, std::cmp::Reverse(id)))
            .map(|(&id, _)| id)
            .unwrap();
        if best != event.small {
            return Err(format!(
                "picked {} but {} scores higher or ties lower",
                event.small, best
            ));
        }
        if scores[&event.small] != event.neighbors_in_large {
            return Err(format!(
                "cluster {} reported {} neighbors, replay {}",
                event.small, event.neighbors_in_large, scores[&event.small]
            ));
        }
        pending.remove(&event.small);
        match event.outcome {
            MergeOutcome::Promoted => {
                if event.neighbors_in_large != 0 {
                    return Err(format!(
                        "cluster {} promoted with neighbors in the large set",
                        event.small
                    ));
                }
                large.insert(event.small);
            }
            MergeOutcome::Merged { host } => {
                if !large.contains(&host) {
                    return Err(format!("host {host} is not in the large set"));
                }
                let best_host = large
                    .iter()
                    .map(|&l| (shared_edges(&clusters, event.small, l), std::cmp::Reverse(l)))
                    .max()
                    .map(|(_, std::cmp::Reverse(l))| l)
                    .unwrap();
                if best_host != host {
                    return Err(format!(
                        "cluster {} merged into {host}, expected {best_host}",
                        event.small
                    ));
                }
                let moved = clusters.remove(&event.small).unwrap();
                clusters.get_mut(&host).unwrap().extend(moved);
            }
        }
    }
    if leaf_nodes(before) != leaf_nodes(after) {
        return Err("leaf-covered node set changed".into());
    }
    let merges = report.merged.len();
    let pruned = report.pruned.len();
    if after.len() + merges + pruned != before.len() || report.clusters_after != after.len() {
        return Err(format!(
            "cluster count {} -> {} with {merges} merges, {pruned} pruned",
            before.len(),
            after.len()
        ));
    }
    for &id in &report.pruned {
        let c = before.cluster(id).ok_or(format!("pruned cluster {id} unknown"))?;
        if c.is_leaf() || after.cluster(id).is_some() {
            return Err(format!("cluster {id} wrongly pruned"));
        }
        if c.children.iter().any(|k| after.cluster(*k).is_some()) {
            return Err(format!("pruned cluster {id} kept a child"));
        }
    }
    for c in after.clusters() {
        if c.is_leaf() != clusters.contains_key(&c.id) {
            return Err(format!("cluster {} leaf status disagrees with replay", c.id));
        }
    }
    let leaf_ids: BTreeSet<ClusterId> = after.leaves().map(|c| c.id).collect();
    if leaf_ids != clusters.keys().copied().collect::<BTreeSet<_>>() {
        let replay: BTreeSet<ClusterId> = clusters.keys().copied().collect();
        let extra: Vec<_> = leaf_ids.difference(&replay).collect();
        let missing: Vec<_> = replay.difference(&leaf_ids).collect();
        return Err(format!(
            "leaf set differs from replay: unexpected {extra:?}, missing {missing:?}"
        ));
    }
    for (id, nodes) in &clusters {
        let c = after.cluster(*id).ok_or(format!("cluster {id} missing after merge"))?;
        if c.members.iter().copied().collect::<BTreeSet<_>>() != *nodes {
            return Err(format!("cluster {id} membership differs from replay"));
        }
    }
    Ok(())
}

/// Checks budget safety, per-community rank order and prefix property,
/// round-robin fairness, retirement reasons, and cost accounting.
pub fn check_sample(g: &Graph, h: &Hierarchy, costs: &EdgeCosts, s: &SampleResult) -> Result<(), String> {
    if s.total_tokens > s.budget {
        return Err(format!("spent {} of {}", s.total_tokens, s.budget));
    }
    let spent: u64 = s.selected.iter().map(|e| e.cost).sum();
    if spent != s.total_tokens {
        return Err("selected costs do not add up".into());
    }
    let ranked = ranked_community_edges(h, g);
    let mut taken: BTreeMap<ClusterId, usize> = BTreeMap::new();
    for e in &s.selected {
        let list = &ranked
            .iter()
            .find(|(c, _)| *c == e.community)
            .ok_or("unknown community")?
            .1;
        let i = taken.entry(e.community).or_insert(0);
        if list.get(*i) != Some(&(e.u, e.v)) {
            return Err(format!("community {} took an edge out of rank order", e.community));
        }
        if costs.get(e.u, e.v) != Some(e.cost) {
            return Err("edge cost mismatch".into());
        }
        *i += 1;
    }
    let retired: BTreeMap<ClusterId, RetireReason> = s.retired.iter().copied().collect();
    let remaining = s.budget - s.total_tokens;
    for (c, list) in &ranked {
        let count = taken.get(c).copied().unwrap_or(0);
        match retired.get(c) {
            Some(RetireReason::Exhausted) if count != list.len() => {
                return Err(format!("community {c} marked exhausted with edges left"))
            }
            Some(RetireReason::Unaffordable) if count >= list.len() => {
                return Err(format!("community {c} marked unaffordable with nothing left"))
            }
            None => return Err(format!("community {c} never retired")),
            _ => {}
        }
        if let Some(next) = list.get(count) {
            if costs.get(next.0, next.1).unwrap() <= remaining {
                return Err(format!("community {c} stopped with an affordable next edge"));
            }
        }
    }
    // fairness: whenever a community takes edge k, any community that ends
    // with fewer than k - 1 edges must already have been stuck
    let mut counts: BTreeMap<ClusterId, usize> = BTreeMap::new();
    let mut remaining = s.budget;
    for e in &s.selected {
        let k = counts.get(&e.community).copied().unwrap_or(0) + 1;
        for (c, list) in &ranked {
            let last = taken.get(c).copied().unwrap_or(0);
            if *c != e.community && last + 2 <= k && last < list.len() {
                let next = list[last];
                if costs.get(next.0, next.1).unwrap() <= remaining {
                    return Err(format!(
                        "community {} took edge {k} while {c} could still afford edge {}",
                        e.community,
                        last + 1
                    ));
                }
            }
        }
        counts.insert(e.community, k);
        remaining -= e.cost;
    }
    let expected = rrtc_oracle(&ranked, costs, s.budget);
    let got: Vec<(ClusterId, (NodeId, NodeId))> = s.selected.iter().map(|e| (e.community, (e.u, e.v))).collect();
    if expected != got {
        return Err("selection differs from the reference round robin".into());
    }
    Ok(())
}

/// Plain round robin: each pass visits the communities in order and takes
/// the next edge of every one still active; a community stops for good when
/// it runs out or its next edge does not fit.
pub fn rrtc_oracle(
    ranked: &[(ClusterId, Vec<(NodeId, NodeId)>)],
    costs: &EdgeCosts,
    budget: u64,
) -> Vec<(ClusterId, (NodeId, NodeId))> {
    let mut pos = vec![0; ranked.len()];
    let mut active = vec![true; ranked.len()];
    let mut remaining = budget;
    let mut out = Vec::new();
    while active.iter().any(|&a| a) {
        for (i, (c, list)) in ranked.iter().enumerate() {
            if !active[i] {
                continue;
            }
            match list.get(pos[i]) {
                Some(&(u, v)) if costs.get(u, v).unwrap() <= remaining => {
                    remaining -= costs.get(u, v).unwrap();
                    pos[i] += 1;
                    out.push((*c, (u, v)));
                }
                _ => active[i] = false,
            }
        }
    }
    out
}

pub fn merge_count(g: &Graph, h: &Hierarchy, mode: MergeMode) -> usize {
    kcore_graphrag::merge_small_clusters(g, h, mode).0.len()
}
