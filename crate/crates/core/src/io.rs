//! File formats.
//!
//! * edges: TSV `src<TAB>dst[<TAB>weight]`, `#` comments; weights are
//!   validated and dropped.
//! * nodes: JSON Lines `{"id", "label"?, "tokens"?, "text"?}`.
//! * edge costs: TSV `src<TAB>dst<TAB>cost`.
//! * samples: TSV `src<TAB>dst<TAB>community<TAB>cost`.
//!
//! JSON is written with sorted keys and a trailing newline so identical
//! inputs give identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::decomposition::CoreDecomposition;
use crate::error::{Error, Result};
use crate::fixture::Fixture;
use crate::graph::{Graph, NodeId, NodeMeta};
use crate::hierarchy::{Cluster, ClusterId, ClusterKind, Hierarchy};
use crate::sampling::{EdgeCosts, SelectedEdge, TokenModel};

fn data_lines(reader: impl BufRead) -> impl Iterator<Item = Result<(usize, String)>> {
    reader.lines().enumerate().filter_map(|(i, line)| match line {
        Err(e) => Some(Err(Error::Io(e))),
        Ok(l) => {
            let trimmed = l.trim_end_matches('\r');
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                None
            } else {
                Some(Ok((i + 1, trimmed.to_string())))
            }
        }
    })
}

fn columns(line: usize, text: &str, min: usize, max: usize) -> Result<Vec<String>> {
    let cols: Vec<String> = text.split('\t').map(|c| c.trim().to_string()).collect();
    if cols.len() < min || cols.len() > max {
        let expected = if min == max {
            format!("{min}")
        } else {
            format!("{min} to {max}")
        };
        return Err(Error::parse(
            line,
            format!("expected {expected} tab-separated columns, found {}", cols.len()),
        ));
    }
    if let Some(i) = cols.iter().take(2).position(|c| c.is_empty()) {
        return Err(Error::parse(line, format!("empty node id in column {}", i + 1)));
    }
    Ok(cols)
}

pub fn read_edges(reader: impl BufRead) -> Result<Vec<(String, String)>> {
    let mut edges = Vec::new();
    for row in data_lines(reader) {
        let (line, text) = row?;
        let mut cols = columns(line, &text, 2, 3)?;
        if let Some(w) = cols.get(2) {
            if w.parse::<f64>().map_or(true, |w| !w.is_finite()) {
                return Err(Error::parse(line, format!("invalid weight `{w}`")));
            }
        }
        cols.truncate(2);
        let dst = cols.pop().expect("two columns");
        let src = cols.pop().expect("two columns");
        edges.push((src, dst));
    }
    Ok(edges)
}

#[derive(Debug, Deserialize)]
struct NodeRecord {
    id: String,
    #[serde(default)]
    label: String,
    tokens: Option<u64>,
    text: Option<String>,
}

pub fn read_nodes(reader: impl BufRead, tokens: &TokenModel) -> Result<Vec<NodeMeta>> {
    let mut nodes = Vec::new();
    for row in data_lines(reader) {
        let (line, text) = row?;
        let record: NodeRecord = serde_json::from_str(&text).map_err(|e| Error::parse(line, e.to_string()))?;
        if record.id.is_empty() {
            return Err(Error::parse(line, "empty node id"));
        }
        let count = tokens.node_tokens(record.tokens, record.text.as_deref());
        nodes.push(NodeMeta::new(record.id, record.label, count));
    }
    Ok(nodes)
}

pub fn read_cost_records(reader: impl BufRead) -> Result<Vec<(String, String, u64)>> {
    let mut out = Vec::new();
    for row in data_lines(reader) {
        let (line, text) = row?;
        let cols = columns(line, &text, 3, 3)?;
        let cost = cols[2]
            .parse()
            .map_err(|_| Error::parse(line, format!("invalid cost `{}`", cols[2])))?;
        out.push((cols[0].clone(), cols[1].clone(), cost));
    }
    Ok(out)
}

/// Default node-token costs for every edge of `g`, overridden by `records`.
/// Records naming nodes outside `g` are ignored (they were cut by LCC).
pub fn edge_costs(g: &Graph, relation_overhead: u64, records: &[(String, String, u64)]) -> EdgeCosts {
    let mut costs = EdgeCosts::from_node_tokens(g, relation_overhead);
    for (src, dst, cost) in records {
        if let (Some(u), Some(v)) = (g.node_id(src), g.node_id(dst)) {
            if g.has_edge(u, v) {
                costs.insert(u, v, *cost);
            }
        }
    }
    costs
}

pub fn open(path: &Path) -> Result<std::io::BufReader<fs::File>> {
    let file = fs::File::open(path)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
    Ok(std::io::BufReader::new(file))
}

/// Sorted-key, pretty-printed JSON with a trailing newline.
pub fn to_json_string(value: &impl Serialize) -> Result<String> {
    // round-tripping through Value sorts every object's keys
    let value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, to_json_string(value)?)?;
    Ok(())
}

pub fn read_json(path: &Path) -> Result<Value> {
    Ok(serde_json::from_reader(open(path)?)?)
}

pub fn decomposition_json(g: &Graph, d: &CoreDecomposition) -> Value {
    let cores: BTreeMap<&str, usize> = g.nodes().map(|v| (g.external_id(v), d.core(v))).collect();
    json!({ "max_core": d.max_core(), "cores": cores })
}

fn names(g: &Graph, nodes: &[NodeId]) -> Vec<String> {
    nodes.iter().map(|&v| g.external_id(v).to_string()).collect()
}

pub fn hierarchy_json(g: &Graph, h: &Hierarchy) -> Value {
    let clusters: Vec<Value> = h
        .clusters()
        .map(|c| {
            json!({
                "id": c.id,
                "level": c.level,
                "kind": c.kind,
                "parent": c.parent,
                "children": c.children,
                "members": names(g, &c.members),
                "anchors": names(g, &c.anchors),
                "attached": names(g, &c.attached),
                "merged": names(g, &c.merged),
            })
        })
        .collect();
    let attached: BTreeMap<&str, ClusterId> = h
        .attached_singletons()
        .iter()
        .map(|(&v, &c)| (g.external_id(v), c))
        .collect();
    json!({
        "max_cluster_size": h.max_cluster_size(),
        "clusters": clusters,
        "attached_singletons": attached,
        "global_singletons": names(g, h.global_singletons()),
    })
}

#[derive(Deserialize)]
struct ClusterRecord {
    id: ClusterId,
    level: usize,
    kind: ClusterKind,
    parent: Option<ClusterId>,
    members: Vec<String>,
    #[serde(default)]
    anchors: Vec<String>,
    #[serde(default)]
    attached: Vec<String>,
    #[serde(default)]
    merged: Vec<String>,
}

#[derive(Deserialize)]
struct HierarchyRecord {
    max_cluster_size: usize,
    clusters: Vec<ClusterRecord>,
    #[serde(default)]
    attached_singletons: BTreeMap<String, ClusterId>,
    #[serde(default)]
    global_singletons: Vec<String>,
}

fn resolve(g: &Graph, names: &[String]) -> Result<Vec<NodeId>> {
    let mut ids = names
        .iter()
        .map(|n| g.node_id(n).ok_or_else(|| Error::UnknownNode(n.clone())))
        .collect::<Result<Vec<_>>>()?;
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Rebuilds a hierarchy written by [`hierarchy_json`] against the same graph.
pub fn hierarchy_from_json(g: &Graph, value: Value) -> Result<Hierarchy> {
    let record: HierarchyRecord = serde_json::from_value(value)?;
    let mut clusters = Vec::with_capacity(record.clusters.len());
    for c in record.clusters {
        let mut cluster = Cluster::new(c.id, c.level, c.kind, c.parent, resolve(g, &c.members)?);
        cluster.anchors = resolve(g, &c.anchors)?;
        cluster.attached = resolve(g, &c.attached)?;
        cluster.merged = resolve(g, &c.merged)?;
        for v in cluster.anchors.iter().chain(&cluster.attached).chain(&cluster.merged) {
            if !cluster.contains(*v) {
                return Err(Error::InvalidHierarchy(format!(
                    "cluster {} lists `{}` outside its members",
                    c.id,
                    g.external_id(*v)
                )));
            }
        }
        clusters.push(cluster);
    }
    let mut attached = BTreeMap::new();
    for (name, c) in &record.attached_singletons {
        let v = g.node_id(name).ok_or_else(|| Error::UnknownNode(name.clone()))?;
        attached.insert(v, *c);
    }
    let global = resolve(g, &record.global_singletons)?;
    Hierarchy::from_parts(clusters, global, attached, record.max_cluster_size)
}

pub const FIXTURE_EDGES_FILE: &str = "edges.tsv";
pub const FIXTURE_NODES_FILE: &str = "nodes.jsonl";

/// Writes `edges.tsv` and `nodes.jsonl` into `dir`.
pub fn write_fixture(dir: &Path, fixture: &Fixture) -> Result<()> {
    let mut edges = String::new();
    for (u, v) in &fixture.edges {
        edges.push_str(&format!("{u}\t{v}\n"));
    }
    fs::write(dir.join(FIXTURE_EDGES_FILE), edges)?;
    let mut nodes = String::new();
    for n in &fixture.nodes {
        let record = json!({ "id": n.external_id, "label": n.label, "tokens": n.token_count });
        nodes.push_str(&serde_json::to_string(&record)?);
        nodes.push('\n');
    }
    fs::write(dir.join(FIXTURE_NODES_FILE), nodes)?;
    Ok(())
}

pub fn write_sample(mut out: impl Write, g: &Graph, selected: &[SelectedEdge]) -> Result<()> {
    for e in selected {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            g.external_id(e.u),
            g.external_id(e.v),
            e.community,
            e.cost
        )?;
    }
    Ok(())
}

pub fn read_sample(reader: impl BufRead, g: &Graph) -> Result<Vec<SelectedEdge>> {
    let mut out = Vec::new();
    for row in data_lines(reader) {
        let (line, text) = row?;
        let cols = columns(line, &text, 4, 4)?;
        let node = |name: &str| g.node_id(name).ok_or_else(|| Error::UnknownNode(name.to_string()));
        let number = |s: &str| {
            s.parse::<u64>()
                .map_err(|_| Error::parse(line, format!("invalid number `{s}`")))
        };
        out.push(SelectedEdge {
            u: node(&cols[0])?,
            v: node(&cols[1])?,
            community: number(&cols[2])? as ClusterId,
            cost: number(&cols[3])?,
        });
    }
    Ok(out)
}
