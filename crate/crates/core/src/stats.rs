use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::hierarchy::{Cluster, ClusterId, Hierarchy};
use crate::sampling::SelectedEdge;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LevelTag {
    /// Leaf clusters.
    Lf,
    /// Distinct parents of leaf clusters.
    L1,
    /// Every cluster at the given hierarchy level.
    Level(usize),
}

impl fmt::Display for LevelTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevelTag::Lf => f.write_str("lf"),
            LevelTag::L1 => f.write_str("l1"),
            LevelTag::Level(l) => write!(f, "{l}"),
        }
    }
}

impl FromStr for LevelTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lf" => Ok(LevelTag::Lf),
            "l1" => Ok(LevelTag::L1),
            other => other
                .parse()
                .map(LevelTag::Level)
                .map_err(|_| Error::config(format!("unknown level `{s}`, expected lf, l1 or a number"))),
        }
    }
}

impl Serialize for LevelTag {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Selected clusters, ordered by id.
pub fn select_level(h: &Hierarchy, tag: LevelTag) -> Vec<&Cluster> {
    match tag {
        LevelTag::Lf => h.leaves().collect(),
        LevelTag::L1 => {
            let parents: BTreeSet<ClusterId> = h.leaves().filter_map(|c| c.parent).collect();
            parents.into_iter().filter_map(|id| h.cluster(id)).collect()
        }
        LevelTag::Level(l) => h.clusters().filter(|c| c.level == l).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommunityStats {
    pub level: LevelTag,
    pub num_communities: usize,
    /// Share of all node tokens held by nodes in the selected clusters.
    pub coverage_pct_nodes: f64,
    /// Share of all node tokens held by endpoints of sampled edges that fall
    /// inside the selected clusters; `None` without a sample.
    pub coverage_pct_sampled: Option<f64>,
    /// Cluster size to number of clusters.
    pub histogram: BTreeMap<usize, usize>,
}

fn pct(part: u64, total: u64) -> f64 {
    100.0 * part as f64 / total as f64
}

pub fn community_stats(
    h: &Hierarchy,
    tag: LevelTag,
    g: &Graph,
    sampled: Option<&[SelectedEdge]>,
) -> Result<CommunityStats> {
    let total = g.total_tokens();
    if total == 0 {
        return Err(Error::UndefinedCoverage);
    }
    let selected = select_level(h, tag);
    let mut covered: BTreeSet<NodeId> = BTreeSet::new();
    let mut histogram = BTreeMap::new();
    for c in &selected {
        *histogram.entry(c.members.len()).or_insert(0) += 1;
        covered.extend(c.members.iter().copied());
    }
    let tokens = |nodes: &BTreeSet<NodeId>| nodes.iter().map(|&v| g.token_count(v)).sum::<u64>();

    let coverage_pct_sampled = sampled.map(|edges| {
        let sampled: BTreeSet<NodeId> = edges
            .iter()
            .flat_map(|e| [e.u, e.v])
            .filter(|v| covered.contains(v))
            .collect();
        pct(tokens(&sampled), total)
    });
    Ok(CommunityStats {
        level: tag,
        num_communities: selected.len(),
        coverage_pct_nodes: pct(tokens(&covered), total),
        coverage_pct_sampled,
        histogram,
    })
}
