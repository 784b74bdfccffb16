//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any fail.

mod common;

use std::time::{Duration, Instant};

use kcore_graphrag::decomposition::core_numbers;
use kcore_graphrag::fixture::{kg_sparse, random_sparse};
use kcore_graphrag::graph::{Graph, NodeId, NodeMeta};
use kcore_graphrag::hierarchy::build_hierarchy;
use kcore_graphrag::io;
use kcore_graphrag::merge::{merge_small_clusters, MergeMode};
use kcore_graphrag::modularity::{
    enumerate_degeneracy, modularity, pair_perturbation_bound, single_move_bound, Partition,
};
use kcore_graphrag::pipeline::{run_pipeline, PipelineConfig};
use kcore_graphrag::sampling::{
    derive_max_cluster_size, edge_fraction_budget, rrtc_sample, EdgeCosts, DEFAULT_RELATION_OVERHEAD,
    DEFAULT_TOKEN_LIMIT,
};
use kcore_graphrag::stats::{community_stats, select_level, LevelTag};
use rand::seq::SliceRandom;
use rand::Rng;

use common::*;

const TOL: f64 = 1e-12;
const FIXTURES: usize = 100;
const FIXTURE_NODES: usize = 1000;

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Verdict {
    Verdict {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Verdict {
    Verdict {
        pass: false,
        detail: detail.into(),
    }
}

fn fixtures() -> Vec<Graph> {
    (0..FIXTURES as u64)
        .map(|seed| kg_sparse(FIXTURE_NODES, seed).unwrap().graph().unwrap())
        .collect()
}

fn core_oracle() -> Verdict {
    let start = Instant::now();
    let mut rng = seeded(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.gen_range(1..=50);
        let p = rng.gen_range(0.02..0.4);
        let g = random_graph(&mut rng, n, p);
        if core_numbers(&g).cores() != brute_force_cores(&g).as_slice() {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("200 graphs, {mismatches} mismatches, {:.2?}", elapsed);
    if mismatches == 0 && elapsed < Duration::from_secs(10) {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn reference_hierarchy() -> Verdict {
    let g = sixteen_node_graph();
    let h = build_hierarchy(&g, 16).unwrap();
    let describe = |ids: Vec<&kcore_graphrag::Cluster>| {
        let mut v: Vec<String> = ids
            .iter()
            .map(|c| format!("{}:{}:{}", c.level, c.kind.as_str(), names(&g, &c.members)))
            .collect();
        v.sort();
        v
    };
    let leaves = describe(select_level(&h, LevelTag::Lf));
    let l1 = describe(select_level(&h, LevelTag::L1));
    let expected_leaves = vec![
        "2:residual:ab",
        "2:two_hop:cd",
        "3:core:mnop",
        "3:residual:efgh",
        "3:residual:ij",
        "3:residual:kl",
    ];
    let expected_l1 = vec!["1:root:abcdefghijklmnop", "2:core:fghijklmnop"];
    let e = g.node_id("e").unwrap();
    let host = h.attached_singletons().get(&e).and_then(|&c| h.cluster(c));
    let e_ok = host.is_some_and(|c| names(&g, &c.own_members()) == "fgh");
    let ok = leaves == expected_leaves && l1 == expected_l1 && e_ok && h.len() == 8;
    let detail = format!("leaves {leaves:?}, L1 {l1:?}, e attached to f-h: {e_ok}");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn hierarchy_invariants(graphs: &[Graph]) -> Verdict {
    let mut failures = Vec::new();
    for (seed, g) in graphs.iter().enumerate() {
        let m = derive_max_cluster_size(DEFAULT_TOKEN_LIMIT, g).unwrap();
        let cores = core_numbers(g);
        let h = build_hierarchy(g, m).unwrap();
        if let Err(e) = check_hierarchy(g, cores.cores(), &h) {
            failures.push(format!("seed {seed}: {e}"));
            continue;
        }
        let lf = community_stats(&h, LevelTag::Lf, g, None).unwrap();
        if lf.coverage_pct_nodes != 100.0 {
            failures.push(format!("seed {seed}: LF coverage {}", lf.coverage_pct_nodes));
        }
        let again = build_hierarchy(g, m).unwrap();
        let a = io::to_json_string(&io::hierarchy_json(g, &h)).unwrap();
        let b = io::to_json_string(&io::hierarchy_json(g, &again)).unwrap();
        if a != b {
            failures.push(format!("seed {seed}: runs differ"));
        }
    }
    let detail = format!(
        "{} fixtures (n = {FIXTURE_NODES}), {} failures {:?}",
        graphs.len(),
        failures.len(),
        failures.first()
    );
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn merge_invariants(graphs: &[Graph]) -> Verdict {
    let mut failures = Vec::new();
    let (mut merged, mut promoted) = (0, 0);
    for (seed, g) in graphs.iter().enumerate() {
        let m = derive_max_cluster_size(DEFAULT_TOKEN_LIMIT, g).unwrap();
        let h = build_hierarchy(g, m).unwrap();
        let (two_hop, report) = merge_small_clusters(g, &h, MergeMode::TwoHopOnly);
        if let Err(e) = check_merge(g, &h, &two_hop, &report) {
            failures.push(format!("seed {seed} m2hc: {e}"));
        }
        for c in two_hop.leaves().filter(|c| MergeMode::TwoHopOnly.is_eligible(c)) {
            let touches = c
                .members
                .iter()
                .flat_map(|&v| g.neighbors(v))
                .any(|&w| !c.contains(w) && two_hop.leaves().any(|o| o.id != c.id && o.contains(w)));
            if touches {
                failures.push(format!("seed {seed}: size-2 two-hop cluster {} still mergeable", c.id));
            }
        }
        merged += report.merged.len();
        promoted += report.promoted.len();
        let (residual, mrc_report) = merge_small_clusters(g, &h, MergeMode::ResidualAndTwoHop);
        if let Err(e) = check_merge(g, &h, &residual, &mrc_report) {
            failures.push(format!("seed {seed} mrc: {e}"));
        }
        let counts = (residual.leaves().count(), two_hop.leaves().count(), h.leaves().count());
        if !(counts.0 <= counts.1
            && counts.1 <= counts.2
            && residual.len() <= two_hop.len()
            && two_hop.len() <= h.len())
        {
            failures.push(format!("seed {seed}: counts mrc/m2hc/unmerged {counts:?}"));
        }
    }
    let detail = format!(
        "{} fixtures, {merged} merges and {promoted} promotions replayed, {} failures {:?}",
        graphs.len(),
        failures.len(),
        failures.first()
    );
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn rrtc(graphs: &[Graph]) -> Verdict {
    let mut failures = Vec::new();
    let mut runs = 0;
    for (seed, g) in graphs.iter().enumerate() {
        let m = derive_max_cluster_size(DEFAULT_TOKEN_LIMIT, g).unwrap();
        let (h, _) = merge_small_clusters(g, &build_hierarchy(g, m).unwrap(), MergeMode::TwoHopOnly);
        let costs = EdgeCosts::from_node_tokens(g, DEFAULT_RELATION_OVERHEAD);
        for fraction in [0.8, 0.7, 0.6] {
            runs += 1;
            let budget = edge_fraction_budget(g, &costs, fraction).unwrap();
            let s = rrtc_sample(&h, g, &costs, budget).unwrap();
            if let Err(e) = check_sample(g, &h, &costs, &s) {
                failures.push(format!("seed {seed} f {fraction}: {e}"));
            }
            if rrtc_sample(&h, g, &costs, budget).unwrap() != s {
                failures.push(format!("seed {seed} f {fraction}: nondeterministic"));
            }
        }
    }
    let detail = format!(
        "{runs} runs over fractions 0.8/0.7/0.6, {} failures {:?}",
        failures.len(),
        failures.first()
    );
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

/// Small random sparse graph with a random partition.
fn random_instance(rng: &mut impl Rng) -> (Graph, Partition) {
    let n = rng.gen_range(4..=12);
    let extra = rng.gen_range(0..=n / 2);
    let g = random_sparse(n, extra, rng.gen());
    let k = rng.gen_range(1..=n);
    let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    (g, Partition::from_labels(&labels))
}

fn q(g: &Graph, p: &Partition) -> f64 {
    modularity(g, p).unwrap().q
}

/// Sensitivity by full recomputation over every partition-changing move.
fn brute_sensitivity(g: &Graph, p: &Partition, v: NodeId) -> f64 {
    let base = q(g, p);
    p.move_targets(v)
        .into_iter()
        .map(|t| (base - q(g, &p.moved(v, t))).abs())
        .fold(0.0, f64::max)
}

fn single_move_trials() -> Verdict {
    let mut rng = seeded(6);
    let (mut trials, mut violations, mut worst) = (0, 0, 0.0f64);
    while trials < 1000 {
        let (g, p) = random_instance(&mut rng);
        let d = rng.gen_range(1..=3);
        let low: Vec<NodeId> = g.nodes().filter(|&v| g.degree(v) <= d).collect();
        let Some(&v) = low.choose(&mut rng) else { continue };
        let targets = p.move_targets(v);
        let Some(&t) = targets.choose(&mut rng) else { continue };
        trials += 1;
        let observed = (q(&g, &p.moved(v, t)) - q(&g, &p)).abs();
        let bound = single_move_bound(g.degree(v), g.edge_count());
        worst = worst.max(observed / bound);
        if observed > bound + TOL {
            violations += 1;
        }
    }
    let detail = format!("{trials} trials, {violations} violations, max |dQ|/bound {worst:.4}");
    if violations == 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn pair_perturbation_trials() -> Verdict {
    let mut rng = seeded(7);
    let (mut trials, mut violations, mut worst) = (0, 0, 0.0f64);
    while trials < 1000 {
        let (g, p) = random_instance(&mut rng);
        let d = rng.gen_range(1..=3);
        let low: Vec<NodeId> = g.nodes().filter(|&v| g.degree(v) <= d).collect();
        let pairs: Vec<(NodeId, NodeId)> = low
            .iter()
            .flat_map(|&i| low.iter().map(move |&j| (i, j)))
            .filter(|&(i, j)| i != j && !g.has_edge(i, j))
            .collect();
        let Some(&(i, j)) = pairs.choose(&mut rng) else {
            continue;
        };
        let targets = p.move_targets(j);
        let Some(&t) = targets.choose(&mut rng) else { continue };
        trials += 1;
        let observed = (brute_sensitivity(&g, &p, i) - brute_sensitivity(&g, &p.moved(j, t), i)).abs();
        let bound = pair_perturbation_bound(d, g.edge_count());
        worst = worst.max(observed / bound);
        if observed > bound + TOL {
            violations += 1;
        }
    }
    let detail = format!("{trials} trials, {violations} violations, max perturbation/bound {worst:.4}");
    if violations == 0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn degeneracy_certificates() -> Verdict {
    let mut graphs = vec![(
        "4 disjoint edges".to_string(),
        Graph::from_named_edges(&[], &[("a", "b"), ("c", "d"), ("e", "f"), ("g", "h")]).unwrap(),
    )];
    let mut rng = seeded(8);
    for seed in 0..20u64 {
        let n = rng.gen_range(6..=10);
        let extra = rng.gen_range(0..=2);
        graphs.push((format!("sparse seed {seed} n {n}"), random_sparse(n, extra, seed)));
    }
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    let mut certified = 0;
    for (name, g) in &graphs {
        for d in [1, 2] {
            let start = Instant::now();
            let report = enumerate_degeneracy(g, 1.0, d).unwrap();
            let elapsed = start.elapsed();
            slowest = slowest.max(elapsed);
            if !report.proof_bound_holds() {
                failures.push(format!(
                    "{name} d {d}: D = {} < {}",
                    report.count_at_proof_threshold, report.degeneracy_bound
                ));
            } else {
                certified += 1;
            }
            if elapsed > Duration::from_secs(5) {
                failures.push(format!("{name} d {d}: {elapsed:.2?}"));
            }
        }
    }
    let detail = format!(
        "{certified}/{} (graph, d) certified, slowest {slowest:.2?}, failures {:?}",
        graphs.len() * 2,
        failures.first()
    );
    if failures.is_empty() {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn modularity_values() -> Verdict {
    let triangles = Graph::from_named_edges(
        &[],
        &[("a", "b"), ("b", "c"), ("c", "a"), ("d", "e"), ("e", "f"), ("f", "d")],
    )
    .unwrap();
    let edge = Graph::from_named_edges(&[], &[("a", "b")]).unwrap();
    let values = [
        (q(&triangles, &Partition::all_in_one(6)), 0.0),
        (q(&edge, &Partition::all_in_one(2)), 0.0),
        (q(&triangles, &Partition::from_labels(&[0, 0, 0, 1, 1, 1])), 0.5),
        (q(&edge, &Partition::singletons(2)), -0.5),
    ];
    let ok = values.iter().all(|(got, want)| (got - want).abs() <= TOL);
    let detail = format!("{values:?}");
    if ok {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn max_cluster_size_rule() -> Verdict {
    let meta = (0..10).map(|i| NodeMeta::new(format!("n{i}"), "", 40)).collect();
    let g = Graph::from_edges(meta, (1..10).map(|i| (0, i)));
    let m = derive_max_cluster_size(8000, &g).unwrap();
    let detail = format!("derive_max_cluster_size(8000, avg 40) = {m}");
    if m == 200 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn best_of<T>(runs: usize, mut f: impl FnMut() -> T) -> Duration {
    (0..runs)
        .map(|_| {
            let start = Instant::now();
            std::hint::black_box(f());
            start.elapsed()
        })
        .min()
        .unwrap()
}

fn performance() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let fixture = kg_sparse(62_500, 11).unwrap();
    io::write_fixture(dir.path(), &fixture).unwrap();
    let mut cfg = PipelineConfig::new(dir.path().join(io::FIXTURE_EDGES_FILE), dir.path().join("out"));
    cfg.nodes = Some(dir.path().join(io::FIXTURE_NODES_FILE));
    let start = Instant::now();
    let summary = run_pipeline(&cfg).unwrap();
    let pipeline = start.elapsed();

    let small = fixture.graph().unwrap();
    let large = kg_sparse(125_000, 11).unwrap().graph().unwrap();
    let t_small = best_of(15, || core_numbers(&small));
    let t_large = best_of(15, || core_numbers(&large));
    let ratio = t_large.as_secs_f64() / t_small.as_secs_f64();
    let detail = format!(
        "pipeline on {} edges {pipeline:.2?}; decomposition {} edges {t_small:.2?}, {} edges {t_large:.2?}, ratio {ratio:.2}",
        summary.edges,
        small.edge_count(),
        large.edge_count()
    );
    if summary.edges >= 100_000 && pipeline < Duration::from_secs(5) && ratio <= 2.5 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn main() {
    let graphs = fixtures();
    let criteria: Vec<Criterion> = vec![
        ("core decomposition matches brute-force oracle", Box::new(core_oracle)),
        ("sixteen-node reference hierarchy", Box::new(reference_hierarchy)),
        (
            "hierarchy invariants on kg_sparse fixtures",
            Box::new(|| hierarchy_invariants(&graphs)),
        ),
        ("merge invariants (M2hC, MRC)", Box::new(|| merge_invariants(&graphs))),
        (
            "RRTC budget, fairness, rank prefix, determinism",
            Box::new(|| rrtc(&graphs)),
        ),
        ("single-move bound 2k/m + k^2/(2m^2)", Box::new(single_move_trials)),
        (
            "pair perturbation bound 2d^2/(2m)^2",
            Box::new(pair_perturbation_trials),
        ),
        (
            "degeneracy lower bound at proof threshold",
            Box::new(degeneracy_certificates),
        ),
        ("modularity unit values", Box::new(modularity_values)),
        ("max cluster size rule", Box::new(max_cluster_size_rule)),
        ("performance smoke", Box::new(performance)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "[{}] {:>2}. {name}: {}",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
