use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use kcore_graphrag::core_numbers;
use kcore_graphrag::error::{Error, Result};
use kcore_graphrag::fixture::kg_sparse;
use kcore_graphrag::graph::{load_graph, Graph};
use kcore_graphrag::hierarchy::build_hierarchy_with_cores;
use kcore_graphrag::io;
use kcore_graphrag::merge::{merge_small_clusters, MergeMode};
use kcore_graphrag::modularity::{enumerate_degeneracy, verify_sparse_bounds, BoundsOptions};
use kcore_graphrag::pipeline::{load_input, run_pipeline, Budget, ClusterSize, PipelineConfig};
use kcore_graphrag::sampling::{
    derive_max_cluster_size, edge_fraction_budget, rrtc_sample, TokenMode, TokenModel, DEFAULT_RELATION_OVERHEAD,
    DEFAULT_TOKEN_LIMIT,
};
use kcore_graphrag::stats::{community_stats, LevelTag};

const EXIT_CONFIG: u8 = 2;
const EXIT_INPUT: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

/// Deterministic k-core community hierarchies for GraphRAG indexing.
#[derive(Parser)]
#[command(name = "kcore-graphrag", version)]
struct Cli {
    /// Edge list (TSV: src, dst, optional weight).
    #[arg(long, global = true)]
    edges: Option<PathBuf>,
    /// Node records (JSON Lines: id, label, tokens, text).
    #[arg(long, global = true)]
    nodes: Option<PathBuf>,
    /// Output file, or directory for `pipeline` and `gen-fixture`. Defaults to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Characters per token when estimating from node text.
    #[arg(long, global = true, default_value_t = 4.0)]
    chars_per_token: f64,
    /// Ignore explicit token counts and estimate every node from its text.
    #[arg(long, global = true)]
    estimate_tokens: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Core number of every node.
    Decompose,
    /// Build the k-core hierarchy.
    Hierarchy(SizeArgs),
    /// Merge small clusters of a hierarchy.
    Merge {
        #[arg(long)]
        hierarchy: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::M2hc)]
        mode: Mode,
        /// Merge report; defaults to `<out>.report.json` when `--out` is set.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Round-robin token-constrained edge sampling over leaf communities.
    Sample {
        #[arg(long)]
        hierarchy: PathBuf,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        costs: CostArgs,
    },
    /// Community count and coverage for a hierarchy level.
    Stats {
        #[arg(long)]
        hierarchy: PathBuf,
        /// `lf`, `l1`, or a level number.
        #[arg(long, default_value = "lf")]
        level: LevelTag,
        /// Sample TSV for the sampled-coverage figure.
        #[arg(long)]
        sample: Option<PathBuf>,
    },
    /// Exhaustive count of near-optimal partitions (n <= 12).
    Degeneracy {
        #[arg(long)]
        epsilon: f64,
        #[arg(long)]
        d: usize,
        /// Keep every component instead of only the largest.
        #[arg(long)]
        all_components: bool,
    },
    /// Empirical check of the sparse-graph modularity bounds.
    VerifyBounds {
        #[arg(long)]
        d: usize,
        #[arg(long, default_value_t = 32)]
        partitions: usize,
        #[arg(long, default_value_t = 64)]
        max_pairs: usize,
        #[arg(long)]
        all_components: bool,
    },
    /// Run every stage and write all artifacts into `--out`.
    Pipeline {
        #[command(flatten)]
        size: SizeArgs,
        #[arg(long, value_enum, default_value_t = Mode::M2hc)]
        mode: Mode,
        #[command(flatten)]
        budget: BudgetArgs,
        #[command(flatten)]
        costs: CostArgs,
    },
    /// Write a seeded sparse knowledge-graph fixture (edges.tsv, nodes.jsonl).
    GenFixture {
        #[arg(long)]
        n: usize,
    },
}

#[derive(Args)]
struct SizeArgs {
    #[arg(long, conflicts_with = "token_limit")]
    max_cluster_size: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOKEN_LIMIT)]
    token_limit: u64,
}

impl SizeArgs {
    fn cluster_size(&self) -> ClusterSize {
        match self.max_cluster_size {
            Some(m) => ClusterSize::Fixed(m),
            None => ClusterSize::FromTokenLimit(self.token_limit),
        }
    }

    fn resolve(&self, g: &Graph) -> Result<usize> {
        match self.cluster_size() {
            ClusterSize::Fixed(m) => Ok(m),
            ClusterSize::FromTokenLimit(limit) => derive_max_cluster_size(limit, g),
        }
    }
}

#[derive(Args)]
#[group(required = false, multiple = false)]
struct BudgetArgs {
    #[arg(long)]
    token_budget: Option<u64>,
    /// Budget equal to the cost of this fraction of top-ranked edges [default: 0.8].
    #[arg(long)]
    edge_fraction: Option<f64>,
}

impl BudgetArgs {
    fn budget(&self) -> Budget {
        match (self.token_budget, self.edge_fraction) {
            (Some(b), _) => Budget::Tokens(b),
            (None, Some(f)) => Budget::EdgeFraction(f),
            (None, None) => Budget::EdgeFraction(0.8),
        }
    }
}

#[derive(Args)]
struct CostArgs {
    /// Per-edge token costs (TSV: src, dst, cost) overriding the defaults.
    #[arg(long)]
    costs: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_RELATION_OVERHEAD)]
    relation_overhead: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    M2hc,
    Mrc,
}

impl From<Mode> for MergeMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::M2hc => MergeMode::TwoHopOnly,
            Mode::Mrc => MergeMode::ResidualAndTwoHop,
        }
    }
}

enum Outcome {
    Ok,
    VerificationFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::VerificationFailed) => ExitCode::from(EXIT_VERIFICATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { EXIT_CONFIG } else { EXIT_INPUT })
        }
    }
}

fn token_model(cli: &Cli) -> Result<TokenModel> {
    let mode = if cli.estimate_tokens {
        TokenMode::Estimated
    } else {
        TokenMode::Explicit
    };
    TokenModel::new(mode, cli.chars_per_token)
}

fn edges_path(cli: &Cli) -> Result<&Path> {
    cli.edges.as_deref().ok_or_else(|| Error::config("--edges is required"))
}

fn graph(cli: &Cli) -> Result<Graph> {
    load_input(edges_path(cli)?, cli.nodes.as_deref(), &token_model(cli)?)
}

fn full_graph(cli: &Cli) -> Result<Graph> {
    let tokens = token_model(cli)?;
    let edges = io::read_edges(io::open(edges_path(cli)?)?)?;
    let nodes = match &cli.nodes {
        Some(p) => io::read_nodes(io::open(p)?, &tokens)?,
        None => Vec::new(),
    };
    let g = load_graph(&edges, nodes)?;
    // rebuilding from simple edges drops self-loops
    Ok(Graph::from_edges(g.all_meta().to_vec(), g.edges().collect::<Vec<_>>()))
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => std::io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn emit_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<()> {
    emit(out, io::to_json_string(value)?.as_bytes())
}

fn load_hierarchy(g: &Graph, path: &Path) -> Result<kcore_graphrag::Hierarchy> {
    io::hierarchy_from_json(g, io::read_json(path)?)
}

fn run(cli: &Cli) -> Result<Outcome> {
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Decompose => {
            let g = graph(cli)?;
            emit_json(out, &io::decomposition_json(&g, &core_numbers(&g)))?;
        }
        Command::Hierarchy(size) => {
            let g = graph(cli)?;
            let m = size.resolve(&g)?;
            let h = build_hierarchy_with_cores(&g, &core_numbers(&g), m)?;
            emit_json(out, &io::hierarchy_json(&g, &h))?;
        }
        Command::Merge {
            hierarchy,
            mode,
            report,
        } => {
            let g = graph(cli)?;
            let h = load_hierarchy(&g, hierarchy)?;
            let (merged, merge_report) = merge_small_clusters(&g, &h, (*mode).into());
            emit_json(out, &io::hierarchy_json(&g, &merged))?;
            let sidecar = report
                .clone()
                .or_else(|| out.map(|p| PathBuf::from(format!("{}.report.json", p.display()))));
            if let Some(path) = sidecar {
                io::write_json(&path, &merge_report)?;
            }
        }
        Command::Sample {
            hierarchy,
            budget,
            costs,
        } => {
            let g = graph(cli)?;
            let h = load_hierarchy(&g, hierarchy)?;
            let records = match &costs.costs {
                Some(p) => io::read_cost_records(io::open(p)?)?,
                None => Vec::new(),
            };
            let edge_costs = io::edge_costs(&g, costs.relation_overhead, &records);
            let tokens = match budget.budget() {
                Budget::Tokens(b) => b,
                Budget::EdgeFraction(f) => edge_fraction_budget(&g, &edge_costs, f)?,
            };
            let sample = rrtc_sample(&h, &g, &edge_costs, tokens)?;
            let mut tsv = Vec::new();
            io::write_sample(&mut tsv, &g, &sample.selected)?;
            emit(out, &tsv)?;
        }
        Command::Stats {
            hierarchy,
            level,
            sample,
        } => {
            let g = graph(cli)?;
            let h = load_hierarchy(&g, hierarchy)?;
            let sampled = match sample {
                Some(p) => Some(io::read_sample(io::open(p)?, &g)?),
                None => None,
            };
            emit_json(out, &community_stats(&h, *level, &g, sampled.as_deref())?)?;
        }
        Command::Degeneracy {
            epsilon,
            d,
            all_components,
        } => {
            let g = if *all_components { full_graph(cli)? } else { graph(cli)? };
            emit_json(out, &enumerate_degeneracy(&g, *epsilon, *d)?)?;
        }
        Command::VerifyBounds {
            d,
            partitions,
            max_pairs,
            all_components,
        } => {
            let g = if *all_components { full_graph(cli)? } else { graph(cli)? };
            let opts = BoundsOptions {
                partitions: *partitions,
                max_pairs_per_partition: *max_pairs,
                seed: cli.seed,
            };
            let report = verify_sparse_bounds(&g, *d, &opts)?;
            emit_json(out, &report)?;
            if !report.passed() {
                return Ok(Outcome::VerificationFailed);
            }
        }
        Command::Pipeline {
            size,
            mode,
            budget,
            costs,
        } => {
            let out_dir = out.ok_or_else(|| Error::config("--out <dir> is required for pipeline"))?;
            let mut cfg = PipelineConfig::new(edges_path(cli)?, out_dir);
            cfg.nodes = cli.nodes.clone();
            cfg.costs = costs.costs.clone();
            cfg.token_mode = token_model(cli)?.mode;
            cfg.chars_per_token = cli.chars_per_token;
            cfg.cluster_size = size.cluster_size();
            cfg.merge_mode = (*mode).into();
            cfg.budget = budget.budget();
            cfg.relation_overhead = costs.relation_overhead;
            let summary = run_pipeline(&cfg)?;
            eprintln!(
                "{} nodes, {} edges, max core {}, M = {}, {} clusters ({} after merge), {} edges sampled ({} / {} tokens)",
                summary.nodes,
                summary.edges,
                summary.max_core,
                summary.max_cluster_size,
                summary.clusters,
                summary.merged_clusters,
                summary.sampled_edges,
                summary.sampled_tokens,
                summary.budget
            );
        }
        Command::GenFixture { n } => {
            let out_dir = out.ok_or_else(|| Error::config("--out <dir> is required for gen-fixture"))?;
            let fixture = kg_sparse(*n, cli.seed)?;
            fs::create_dir_all(out_dir)?;
            io::write_fixture(out_dir, &fixture)?;
        }
    }
    Ok(Outcome::Ok)
}
