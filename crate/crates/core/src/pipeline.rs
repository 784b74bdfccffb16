use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde_json::json;

use crate::decomposition::core_numbers;
use crate::error::{Error, Result};
use crate::graph::{largest_connected_component, load_graph, Graph};
use crate::hierarchy::build_hierarchy_with_cores;
use crate::io;
use crate::merge::{merge_small_clusters, MergeMode};
use crate::sampling::{
    derive_max_cluster_size, edge_fraction_budget, rrtc_sample, TokenMode, TokenModel, DEFAULT_RELATION_OVERHEAD,
    DEFAULT_TOKEN_LIMIT,
};
use crate::stats::{community_stats, LevelTag};

pub const DECOMPOSITION_FILE: &str = "decomposition.json";
pub const HIERARCHY_FILE: &str = "hierarchy.json";
pub const MERGED_HIERARCHY_FILE: &str = "hierarchy.merged.json";
pub const MERGE_REPORT_FILE: &str = "merge_report.json";
pub const SAMPLE_FILE: &str = "sample.tsv";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ClusterSize {
    /// Derive from the token limit and mean node tokens.
    FromTokenLimit(u64),
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Budget {
    Tokens(u64),
    /// Cost of the top fraction of globally ranked edges.
    EdgeFraction(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub edges: PathBuf,
    pub nodes: Option<PathBuf>,
    pub costs: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub token_mode: TokenMode,
    pub chars_per_token: f64,
    pub cluster_size: ClusterSize,
    pub merge_mode: MergeMode,
    pub budget: Budget,
    pub relation_overhead: u64,
}

impl PipelineConfig {
    pub fn new(edges: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            edges: edges.into(),
            nodes: None,
            costs: None,
            out_dir: out_dir.into(),
            token_mode: TokenMode::Explicit,
            chars_per_token: 4.0,
            cluster_size: ClusterSize::FromTokenLimit(DEFAULT_TOKEN_LIMIT),
            merge_mode: MergeMode::TwoHopOnly,
            budget: Budget::EdgeFraction(0.8),
            relation_overhead: DEFAULT_RELATION_OVERHEAD,
        }
    }

    pub fn token_model(&self) -> Result<TokenModel> {
        TokenModel::new(self.token_mode, self.chars_per_token)
    }
}

/// Reads the edge and optional node files and reduces the graph to its
/// largest connected component.
pub fn load_input(edges: &Path, nodes: Option<&Path>, tokens: &TokenModel) -> Result<Graph> {
    let edge_records = io::read_edges(io::open(edges)?)?;
    let node_records = match nodes {
        Some(path) => io::read_nodes(io::open(path)?, tokens)?,
        None => Vec::new(),
    };
    let g = load_graph(&edge_records, node_records)?;
    Ok(largest_connected_component(&g))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSummary {
    pub nodes: usize,
    pub edges: usize,
    pub max_core: usize,
    pub max_cluster_size: usize,
    pub clusters: usize,
    pub merged_clusters: usize,
    pub sampled_edges: usize,
    pub sampled_tokens: u64,
    pub budget: u64,
    pub timings: Vec<(&'static str, Duration)>,
}

/// Runs every stage and writes the artifacts into `cfg.out_dir`. Errors are
/// wrapped with the name of the stage that failed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineSummary> {
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, Duration)>| {
        timings.push((name, clock.elapsed()));
        clock = Instant::now();
    };

    let tokens = cfg.token_model().map_err(Error::in_stage("config"))?;
    if let Budget::EdgeFraction(f) = cfg.budget {
        if !(0.0..=1.0).contains(&f) {
            return Err(Error::in_stage("config")(Error::config(format!(
                "edge fraction must be in [0, 1], got {f}"
            ))));
        }
    }
    let g = load_input(&cfg.edges, cfg.nodes.as_deref(), &tokens).map_err(Error::in_stage("load"))?;
    let cost_records = match &cfg.costs {
        Some(path) => io::read_cost_records(io::open(path)?).map_err(Error::in_stage("load"))?,
        None => Vec::new(),
    };
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Error::in_stage("output")(e.into()))?;
    let out = |name: &str| cfg.out_dir.join(name);
    lap("load", &mut timings);

    let cores = core_numbers(&g);
    io::write_json(&out(DECOMPOSITION_FILE), &io::decomposition_json(&g, &cores))
        .map_err(Error::in_stage("decompose"))?;
    lap("decompose", &mut timings);

    let max_cluster_size = match cfg.cluster_size {
        ClusterSize::Fixed(m) => m,
        ClusterSize::FromTokenLimit(limit) => {
            derive_max_cluster_size(limit, &g).map_err(Error::in_stage("hierarchy"))?
        }
    };
    let h = build_hierarchy_with_cores(&g, &cores, max_cluster_size).map_err(Error::in_stage("hierarchy"))?;
    io::write_json(&out(HIERARCHY_FILE), &io::hierarchy_json(&g, &h)).map_err(Error::in_stage("hierarchy"))?;
    lap("hierarchy", &mut timings);

    let (merged, report) = merge_small_clusters(&g, &h, cfg.merge_mode);
    io::write_json(&out(MERGED_HIERARCHY_FILE), &io::hierarchy_json(&g, &merged)).map_err(Error::in_stage("merge"))?;
    io::write_json(&out(MERGE_REPORT_FILE), &report).map_err(Error::in_stage("merge"))?;
    lap("merge", &mut timings);

    let costs = io::edge_costs(&g, cfg.relation_overhead, &cost_records);
    let budget = match cfg.budget {
        Budget::Tokens(b) => b,
        Budget::EdgeFraction(f) => edge_fraction_budget(&g, &costs, f).map_err(Error::in_stage("sample"))?,
    };
    let sample = rrtc_sample(&merged, &g, &costs, budget).map_err(Error::in_stage("sample"))?;
    let mut tsv = Vec::new();
    io::write_sample(&mut tsv, &g, &sample.selected).map_err(Error::in_stage("sample"))?;
    fs::write(out(SAMPLE_FILE), tsv).map_err(|e| Error::in_stage("sample")(e.into()))?;
    lap("sample", &mut timings);

    let stats = [LevelTag::Lf, LevelTag::L1]
        .into_iter()
        .map(|tag| community_stats(&merged, tag, &g, Some(&sample.selected)).map(|s| (tag.to_string(), s)))
        .collect::<Result<std::collections::BTreeMap<_, _>>>()
        .map_err(Error::in_stage("stats"))?;
    let stats = json!({
        "max_cluster_size": max_cluster_size,
        "merge_mode": cfg.merge_mode,
        "budget": budget,
        "sampled_tokens": sample.total_tokens,
        "levels": stats,
    });
    io::write_json(&out(STATS_FILE), &stats).map_err(Error::in_stage("stats"))?;
    lap("stats", &mut timings);

    Ok(PipelineSummary {
        nodes: g.node_count(),
        edges: g.edge_count(),
        max_core: cores.max_core(),
        max_cluster_size,
        clusters: h.len(),
        merged_clusters: merged.len(),
        sampled_edges: sample.selected.len(),
        sampled_tokens: sample.total_tokens,
        budget,
        timings,
    })
}
