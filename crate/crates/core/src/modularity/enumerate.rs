use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest node count accepted by exhaustive enumeration (Bell(12) = 4 213 597).
pub const MAX_ENUMERATION_NODES: usize = 12;

/// Number of set partitions of an `n`-element set, via the Bell triangle.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().expect("row is never empty"));
        for &x in &row {
            let last = *next.last().expect("just pushed");
            next.push(last + x);
        }
        row = next;
    }
    row[0]
}

/// `2^floor(n_le_d / (d + 1))`.
pub fn degeneracy_bound(n_le_d: usize, d: usize) -> u64 {
    let exponent = n_le_d / (d + 1);
    1u64.checked_shl(exponent as u32).unwrap_or(u64::MAX)
}

/// Calls `visit(labels, Q)` once for every set partition of the nodes of `g`,
/// in restricted-growth-string order. `Q` is maintained incrementally with
/// integer edge and squared-degree totals.
pub fn for_each_partition_modularity(g: &Graph, mut visit: impl FnMut(&[usize], f64)) -> Result<()> {
    let n = g.node_count();
    if n > MAX_ENUMERATION_NODES {
        return Err(Error::InstanceTooLarge {
            n,
            limit: MAX_ENUMERATION_NODES,
        });
    }
    if g.edge_count() == 0 {
        return Err(Error::UndefinedModularity);
    }
    let mut walker = Walker {
        g,
        labels: vec![0; n],
        totals: vec![0; n],
        internal: 0,
        squared: 0,
        m: g.edge_count() as f64,
        visit: &mut visit,
    };
    walker.descend(0, 0);
    Ok(())
}

struct Walker<'a, F> {
    g: &'a Graph,
    labels: Vec<usize>,
    totals: Vec<u64>,
    internal: u64,
    squared: u64,
    m: f64,
    visit: &'a mut F,
}

impl<F: FnMut(&[usize], f64)> Walker<'_, F> {
    fn descend(&mut self, v: usize, used: usize) {
        let n = self.labels.len();
        if v == n {
            let q = self.internal as f64 / self.m - self.squared as f64 / (4.0 * self.m * self.m);
            (self.visit)(&self.labels, q);
            return;
        }
        let k = self.g.degree(v) as u64;
        let upper = used.min(n - 1);
        for c in 0..=upper {
            let links = self
                .g
                .neighbors(v)
                .iter()
                .take_while(|&&w| w < v)
                .filter(|&&w| self.labels[w] == c)
                .count() as u64;
            let old = self.totals[c];
            self.squared += (old + k) * (old + k) - old * old;
            self.totals[c] = old + k;
            self.internal += links;
            self.labels[v] = c;

            self.descend(v + 1, used.max(c + 1));

            self.internal -= links;
            self.totals[c] = old;
            self.squared -= (old + k) * (old + k) - old * old;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegeneracyReport {
    pub n: usize,
    pub m: usize,
    pub average_degree: f64,
    /// Degree cutoff.
    pub d: usize,
    /// Nodes with degree at most `d`.
    pub n_le_d: usize,
    pub epsilon: f64,
    /// Optimal modularity over all set partitions.
    pub q_star: f64,
    /// Partitions with `Q* - Q < epsilon`.
    pub count: u64,
    /// Total partitions enumerated (Bell(n)).
    pub partitions: u64,
    /// `2^floor(n_le_d / (d + 1))`.
    pub degeneracy_bound: u64,
    /// `d (2 + kbar) / (2m)`.
    pub statement_threshold: f64,
    /// `d (2 + kbar) / ((d + 1) kbar) + d^2 / ((d + 1)^2 kbar^2)`.
    pub proof_threshold: f64,
    pub count_at_statement_threshold: u64,
    pub count_at_proof_threshold: u64,
}

impl DegeneracyReport {
    /// Whether enumeration certifies the lower bound at the proof threshold.
    pub fn proof_bound_holds(&self) -> bool {
        self.count_at_proof_threshold >= self.degeneracy_bound
    }
}

pub(crate) fn thresholds(d: usize, m: usize, avg_degree: f64) -> (f64, f64) {
    let d = d as f64;
    let statement = d * (2.0 + avg_degree) / (2.0 * m as f64);
    let c1 = d * (2.0 + avg_degree) / ((d + 1.0) * avg_degree);
    let c2 = d * d / ((d + 1.0) * (d + 1.0) * avg_degree * avg_degree);
    (statement, c1 + c2)
}

/// Exhaustively enumerates the set partitions of `g` and counts those within
/// `epsilon` of the optimum, alongside the degeneracy bound and thresholds.
pub fn enumerate_degeneracy(g: &Graph, epsilon: f64, d: usize) -> Result<DegeneracyReport> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::config(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut values = Vec::with_capacity(bell_number(g.node_count().min(MAX_ENUMERATION_NODES)) as usize);
    for_each_partition_modularity(g, |_, q| values.push(q))?;
    let q_star = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let count_within = |eps: f64| values.iter().filter(|&&q| q_star - q < eps).count() as u64;

    let n_le_d = g.nodes().filter(|&v| g.degree(v) <= d).count();
    let average_degree = g.average_degree();
    let (statement_threshold, proof_threshold) = thresholds(d, g.edge_count(), average_degree);
    Ok(DegeneracyReport {
        n: g.node_count(),
        m: g.edge_count(),
        average_degree,
        d,
        n_le_d,
        epsilon,
        q_star,
        count: count_within(epsilon),
        partitions: values.len() as u64,
        degeneracy_bound: degeneracy_bound(n_le_d, d),
        statement_threshold,
        proof_threshold,
        count_at_statement_threshold: count_within(statement_threshold),
        count_at_proof_threshold: count_within(proof_threshold),
    })
}
