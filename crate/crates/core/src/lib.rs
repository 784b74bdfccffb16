//! Deterministic k-core community hierarchies for GraphRAG-style indexing.
//!
//! The crate covers graph ingestion and preprocessing, core decomposition,
//! the residual-aware k-core hierarchy, small-cluster merging,
//! token-budgeted round-robin edge sampling, community statistics, and a
//! small exact-modularity lab used to check the degeneracy bounds that
//! motivate replacing modularity optimization.

pub mod decomposition;
pub mod error;
pub mod fixture;
pub mod graph;
pub mod hierarchy;
pub mod io;
pub mod merge;
pub mod modularity;
pub mod pipeline;
pub mod sampling;
pub mod stats;

pub use decomposition::{core_numbers, CoreDecomposition};
pub use error::{Error, Result};
pub use graph::{largest_connected_component, load_graph, Graph, NodeId, NodeMeta};
pub use hierarchy::{build_hierarchy, Cluster, ClusterId, ClusterKind, Hierarchy};
pub use merge::{merge_small_clusters, MergeMode, MergeReport};
pub use modularity::{modularity, Partition};
pub use pipeline::{run_pipeline, PipelineConfig};
pub use sampling::{derive_max_cluster_size, rrtc_sample, EdgeCosts, SampleResult};
pub use stats::{community_stats, select_level, CommunityStats, LevelTag};
