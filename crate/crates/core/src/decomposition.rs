//! Linear-time k-core decomposition by bucket peeling.

use std::collections::BTreeMap;

use crate::graph::{Graph, NodeId};

/// Core number of every node, plus the maximum core.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreDecomposition {
    core: Vec<usize>,
    max_core: usize,
}

impl CoreDecomposition {
    pub fn core(&self, v: NodeId) -> usize {
        self.core[v]
    }

    pub fn cores(&self) -> &[usize] {
        &self.core
    }

    pub fn max_core(&self) -> usize {
        self.max_core
    }

    /// k-shells: core number to the ascending list of nodes with exactly that core.
    pub fn shells(&self) -> BTreeMap<usize, Vec<NodeId>> {
        let mut shells: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        for (v, &c) in self.core.iter().enumerate() {
            shells.entry(c).or_default().push(v);
        }
        shells
    }

    /// Nodes of the k-core (`c(v) >= k`), ascending.
    pub fn k_core(&self, k: usize) -> Vec<NodeId> {
        self.core
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c >= k)
            .map(|(v, _)| v)
            .collect()
    }
}

/// Computes core numbers with the Batagelj-Zaversnik bucket algorithm in
/// O(n + m). Isolated nodes get core 0.
pub fn core_numbers(g: &Graph) -> CoreDecomposition {
    let n = g.node_count();
    if n == 0 {
        return CoreDecomposition {
            core: Vec::new(),
            max_core: 0,
        };
    }
    assert!(n < u32::MAX as usize, "too many nodes for core decomposition");
    // (current degree, position in `order`) side by side, u32 to keep the
    // working set small on large graphs
    let mut node: Vec<[u32; 2]> = g.nodes().map(|v| [g.degree(v) as u32, 0]).collect();
    let max_degree = node.iter().map(|x| x[0]).max().unwrap_or(0) as usize;

    // counting sort of nodes by degree
    let mut bin = vec![0u32; max_degree + 1];
    for x in &node {
        bin[x[0] as usize] += 1;
    }
    let mut start = 0;
    for slot in bin.iter_mut() {
        let count = *slot;
        *slot = start;
        start += count;
    }
    let mut order = vec![0u32; n];
    for (v, x) in node.iter_mut().enumerate() {
        let d = x[0] as usize;
        x[1] = bin[d];
        order[bin[d] as usize] = v as u32;
        bin[d] += 1;
    }
    for d in (1..=max_degree).rev() {
        bin[d] = bin[d - 1];
    }
    bin[0] = 0;

    for i in 0..n {
        let v = order[i] as usize;
        let dv = node[v][0];
        for &u in g.neighbors(v) {
            let [du, pu] = node[u];
            if du > dv {
                let pw = bin[du as usize];
                let w = order[pw as usize];
                if u as u32 != w {
                    order.swap(pu as usize, pw as usize);
                    node[u][1] = pw;
                    node[w as usize][1] = pu;
                }
                bin[du as usize] += 1;
                node[u][0] = du - 1;
            }
        }
    }

    let core: Vec<usize> = node.iter().map(|x| x[0] as usize).collect();
    let max_core = core.iter().copied().max().unwrap_or(0);
    CoreDecomposition { core, max_core }
}
