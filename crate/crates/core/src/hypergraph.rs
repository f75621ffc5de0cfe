//! Intra-modal hypergraphs built by entropy-difference selection.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::entropy::{adaptive_window, EntropyProfile};
use crate::error::{HhnError, Result};
use crate::kernel::DenseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStrategy {
    MaxDiff,
    MinDiff,
    Random { seed: u64 },
}

impl SelectionStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            SelectionStrategy::MaxDiff => "max-diff",
            SelectionStrategy::MinDiff => "min-diff",
            SelectionStrategy::Random { .. } => "random",
        }
    }
}

impl fmt::Display for SelectionStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectionStrategy {
    type Err = HhnError;

    /// Parses `max-diff`, `min-diff`, `random` or `random:<seed>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "max-diff" => Ok(SelectionStrategy::MaxDiff),
            "min-diff" => Ok(SelectionStrategy::MinDiff),
            "random" => Ok(SelectionStrategy::Random { seed: 0 }),
            other => match other.strip_prefix("random:").map(str::parse) {
                Some(Ok(seed)) => Ok(SelectionStrategy::Random { seed }),
                _ => Err(HhnError::Config(format!("unknown selection strategy '{s}'"))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperedge {
    pub center: usize,
    /// Ascending node indices, center included.
    pub members: Vec<usize>,
    pub weight: f64,
    /// Fewer candidates than requested; the edge holds all of them.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    pub n_nodes: usize,
    pub hyperedges: Vec<Hyperedge>,
    /// `n_nodes x n_edges`, entries 0/1.
    pub incidence: DenseMatrix,
    pub operator: DenseMatrix,
}

impl Hypergraph {
    pub fn from_hyperedges(n_nodes: usize, hyperedges: Vec<Hyperedge>) -> Self {
        let mut incidence = DenseMatrix::zeros(n_nodes, hyperedges.len());
        for (e, edge) in hyperedges.iter().enumerate() {
            for &v in &edge.members {
                incidence.set(v, e, 1.0);
            }
        }
        let operator = operator_from_edges(n_nodes, &hyperedges);
        Self {
            n_nodes,
            hyperedges,
            incidence,
            operator,
        }
    }

    pub fn degenerate_count(&self) -> usize {
        self.hyperedges.iter().filter(|e| e.degenerate).count()
    }
}

/// Picks `n - 1` candidates to join `center` in a hyperedge.
///
/// `MaxDiff` maximizes the summed `|H(center) - H(j)|`; because the objective
/// is a sum of independent terms, the top `n - 1` candidates by difference
/// are optimal. Ties go to the smaller node index.
pub fn select_hyperedge(
    profile: &EntropyProfile,
    center: usize,
    candidates: &[usize],
    n: usize,
    strategy: SelectionStrategy,
) -> Hyperedge {
    let want = n.saturating_sub(1);
    let degenerate = candidates.len() < want;
    let picks: Vec<usize> = if candidates.len() <= want {
        candidates.to_vec()
    } else {
        let h0 = profile.entropies[center];
        let diff = |j: usize| (h0 - profile.entropies[j]).abs();
        match strategy {
            SelectionStrategy::MaxDiff | SelectionStrategy::MinDiff => {
                let mut ranked = candidates.to_vec();
                ranked.sort_by(|&a, &b| {
                    let ord = diff(a).total_cmp(&diff(b));
                    let ord = if strategy == SelectionStrategy::MaxDiff {
                        ord.reverse()
                    } else {
                        ord
                    };
                    ord.then(a.cmp(&b))
                });
                ranked.truncate(want);
                ranked
            }
            SelectionStrategy::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(
                    seed ^ (center as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
                );
                rand::seq::index::sample(&mut rng, candidates.len(), want)
                    .into_iter()
                    .map(|k| candidates[k])
                    .collect()
            }
        }
    };
    let mut members = picks;
    members.push(center);
    members.sort_unstable();
    members.dedup();
    let mut edge = Hyperedge {
        center,
        members,
        weight: 1.0,
        degenerate,
    };
    edge.weight = hyperedge_weight(profile, &edge);
    edge
}

/// `1 + mean |H(center) - H(j)|` over the non-center members.
pub fn hyperedge_weight(profile: &EntropyProfile, edge: &Hyperedge) -> f64 {
    let h0 = profile.entropies[edge.center];
    let diffs: Vec<f64> = edge
        .members
        .iter()
        .filter(|&&j| j != edge.center)
        .map(|&j| (h0 - profile.entropies[j]).abs())
        .collect();
    if diffs.is_empty() {
        1.0
    } else {
        1.0 + diffs.iter().sum::<f64>() / diffs.len() as f64
    }
}

/// One hyperedge per node, each drawn from that node's adaptive window.
pub fn build_intra_hypergraph(
    profile: &EntropyProfile,
    n: usize,
    hop: usize,
    strategy: SelectionStrategy,
) -> Result<Hypergraph> {
    let n_nodes = profile.len();
    if n_nodes == 0 {
        return Err(HhnError::Validation("hypergraph over zero nodes".into()));
    }
    if n == 0 {
        return Err(HhnError::Config("hyperedge size must be >= 1".into()));
    }
    let edges: Vec<Hyperedge> = (0..n_nodes)
        .map(|i| {
            let candidates = adaptive_window(profile, i, n_nodes, hop);
            select_hyperedge(profile, i, &candidates, n, strategy)
        })
        .collect();
    let degenerate = edges.iter().filter(|e| e.degenerate).count();
    if degenerate > 0 {
        log::debug!("{degenerate} of {n_nodes} hyperedges are degenerate");
    }
    Ok(Hypergraph::from_hyperedges(n_nodes, edges))
}

/// `D_v^{-1/2} H W D_e^{-1} H^T D_v^{-1/2}` with `D_v` the hyperedge count per node.
pub fn propagation_operator(g: &Hypergraph) -> DenseMatrix {
    operator_from_edges(g.n_nodes, &g.hyperedges)
}

fn operator_from_edges(n_nodes: usize, edges: &[Hyperedge]) -> DenseMatrix {
    let mut degree = vec![0usize; n_nodes];
    for e in edges {
        for &v in &e.members {
            degree[v] += 1;
        }
    }
    assert!(
        degree.iter().all(|&d| d > 0),
        "isolated node in hypergraph: every node must belong to a hyperedge"
    );
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / (d as f64).sqrt()).collect();
    let mut op = DenseMatrix::zeros(n_nodes, n_nodes);
    for e in edges {
        let k = e.weight / e.members.len() as f64;
        for &i in &e.members {
            for &j in &e.members {
                let v = op.get(i, j) + k * inv_sqrt[i] * inv_sqrt[j];
                op.set(i, j, v);
            }
        }
    }
    op
}
