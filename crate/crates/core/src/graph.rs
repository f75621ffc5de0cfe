//! Per-sample hybrid graph: two intra-modal hypergraphs plus the weighted
//! cross-modal graph, with JSON/DOT export for inspection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::crossmodal::{build_cross_graph, CrossEdge, CrossGraph, TemporalWeighting};
use crate::entropy::{entropy_profile, EntropyProfile};
use crate::error::{HhnError, Result};
use crate::hypergraph::{build_intra_hypergraph, Hyperedge, Hypergraph, SelectionStrategy};
use crate::ingest::{feature_matrix, AssembledSample, ModalityKind, SegmentNode};
use crate::kernel::DenseMatrix;

pub const GRAPH_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GraphConfig {
    pub r_min: usize,
    pub alpha: f64,
    pub hyperedge_size: usize,
    pub hop: usize,
    pub strategy: SelectionStrategy,
    pub semantic_topk: Option<usize>,
    pub temporal_weighting: TemporalWeighting,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            r_min: 6,
            alpha: 2.0,
            hyperedge_size: 4,
            hop: 2,
            strategy: SelectionStrategy::MaxDiff,
            semantic_topk: None,
            temporal_weighting: TemporalWeighting::Source,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_min < 1 {
            return Err(HhnError::Config("r_min must be >= 1".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(HhnError::Config(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.hyperedge_size < 1 {
            return Err(HhnError::Config("hyperedge size must be >= 1".into()));
        }
        if self.hop < 1 {
            return Err(HhnError::Config("hop must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interval {
    pub t_start: i64,
    pub t_end: i64,
}

#[derive(Debug, Clone)]
pub struct HybridGraph {
    pub sample_id: String,
    pub labels: Vec<u8>,
    pub seq_features: DenseMatrix,
    pub video_features: DenseMatrix,
    pub seq_times: Vec<Interval>,
    pub video_times: Vec<Interval>,
    pub seq_profile: EntropyProfile,
    pub video_profile: EntropyProfile,
    pub seq_hypergraph: Hypergraph,
    pub video_hypergraph: Hypergraph,
    pub cross: CrossGraph,
    /// Video neighbours of each sequence node with their log temporal weight.
    pub seq_neighbors: Vec<Vec<(usize, f64)>>,
}

fn times(nodes: &[SegmentNode]) -> Vec<Interval> {
    nodes
        .iter()
        .map(|n| Interval {
            t_start: n.t_start,
            t_end: n.t_end,
        })
        .collect()
}

pub fn build_hybrid_graph(sample: &AssembledSample, cfg: &GraphConfig) -> Result<HybridGraph> {
    cfg.validate()?;
    let intra = |nodes: &[SegmentNode], salt: u64| -> Result<(EntropyProfile, Hypergraph)> {
        let profile = entropy_profile(nodes, cfg.r_min, cfg.alpha)?;
        let strategy = match cfg.strategy {
            SelectionStrategy::Random { seed } => SelectionStrategy::Random { seed: seed ^ salt },
            s => s,
        };
        let g = build_intra_hypergraph(&profile, cfg.hyperedge_size, cfg.hop, strategy)?;
        Ok((profile, g))
    };
    let (seq_profile, seq_hypergraph) = intra(&sample.sequence, 0)?;
    let (video_profile, video_hypergraph) = intra(&sample.video, 0x5eed_f00d)?;
    let cross = build_cross_graph(
        &sample.sequence,
        &sample.video,
        cfg.semantic_topk,
        cfg.temporal_weighting,
    )?;
    let seq_neighbors = cross.sequence_neighbors();
    Ok(HybridGraph {
        sample_id: sample.sample_id.clone(),
        labels: sample.labels.clone(),
        seq_features: feature_matrix(&sample.sequence),
        video_features: feature_matrix(&sample.video),
        seq_times: times(&sample.sequence),
        video_times: times(&sample.video),
        seq_profile,
        video_profile,
        seq_hypergraph,
        video_hypergraph,
        cross,
        seq_neighbors,
    })
}

impl HybridGraph {
    pub fn n_seq(&self) -> usize {
        self.seq_features.rows()
    }

    pub fn n_video(&self) -> usize {
        self.video_features.rows()
    }

    /// Same graph with every cross-modal edge removed.
    pub fn without_cross_edges(&self) -> Self {
        let mut g = self.clone();
        g.cross = CrossGraph::empty(self.n_seq(), self.n_video());
        g.seq_neighbors = vec![Vec::new(); self.n_seq()];
        g
    }

    pub fn diagnostics(&self) -> GraphDiagnostics {
        let modality = |p: &EntropyProfile, g: &Hypergraph| {
            let mut windows = BTreeMap::new();
            for &r in &p.windows {
                *windows.entry(r).or_insert(0usize) += 1;
            }
            ModalityDiagnostics {
                n_nodes: p.len(),
                mean_entropy: p.mean,
                entropy_histogram: histogram(&p.entropies, 10),
                window_sizes: windows,
                degenerate_edges: g.degenerate_count(),
                max_edge_size: g.hyperedges.iter().map(|e| e.members.len()).max().unwrap_or(0),
            }
        };
        GraphDiagnostics {
            sequence: modality(&self.seq_profile, &self.seq_hypergraph),
            video: modality(&self.video_profile, &self.video_hypergraph),
            cross_edges: self.cross.edges.len(),
        }
    }

    pub fn export(&self) -> GraphExport {
        let nodes = |kind: ModalityKind, t: &[Interval], p: &EntropyProfile| {
            t.iter()
                .enumerate()
                .map(|(i, iv)| NodeExport {
                    modality: kind,
                    index: i,
                    t_start: iv.t_start,
                    t_end: iv.t_end,
                    entropy: p.entropies[i],
                    window: p.windows[i],
                })
                .collect::<Vec<_>>()
        };
        let mut all = nodes(ModalityKind::Sequence, &self.seq_times, &self.seq_profile);
        all.extend(nodes(ModalityKind::Video, &self.video_times, &self.video_profile));
        GraphExport {
            schema_version: GRAPH_SCHEMA_VERSION,
            sample_id: self.sample_id.clone(),
            labels: self.labels.clone(),
            nodes: all,
            hyperedges: HyperedgeExport {
                sequence: self.seq_hypergraph.hyperedges.clone(),
                video: self.video_hypergraph.hyperedges.clone(),
            },
            cross_edges: self.cross.edges.clone(),
            diagnostics: self.diagnostics(),
        }
    }

    /// Graphviz rendering of the clique expansion plus dashed cross edges.
    pub fn to_dot(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "graph \"{}\" {{", self.sample_id.replace('"', "'"));
        for (prefix, g) in [("s", &self.seq_hypergraph), ("v", &self.video_hypergraph)] {
            for i in 0..g.n_nodes {
                let _ = writeln!(out, "  {prefix}{i};");
            }
            let mut pairs = BTreeSet::new();
            for e in &g.hyperedges {
                for (a, &x) in e.members.iter().enumerate() {
                    for &y in &e.members[a + 1..] {
                        pairs.insert((x, y));
                    }
                }
            }
            for (x, y) in pairs {
                let _ = writeln!(out, "  {prefix}{x} -- {prefix}{y};");
            }
        }
        let n_seq = self.n_seq();
        for e in self.cross.edges.iter().filter(|e| e.from < e.to) {
            let _ = writeln!(
                out,
                "  s{} -- v{} [style=dashed, label=\"{:.4}\"];",
                e.from,
                e.to - n_seq,
                e.weight
            );
        }
        out.push_str("}\n");
        out
    }
}

fn histogram(values: &[f64], bins: usize) -> Histogram {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut counts = vec![0usize; bins];
    let width = (hi - lo) / bins as f64;
    for &v in values {
        let b = if width > 0.0 {
            (((v - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    Histogram {
        min: lo,
        max: hi,
        counts,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub min: f64,
    pub max: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityDiagnostics {
    pub n_nodes: usize,
    pub mean_entropy: f64,
    pub entropy_histogram: Histogram,
    pub window_sizes: BTreeMap<usize, usize>,
    pub degenerate_edges: usize,
    pub max_edge_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDiagnostics {
    pub sequence: ModalityDiagnostics,
    pub video: ModalityDiagnostics,
    pub cross_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeExport {
    pub modality: ModalityKind,
    pub index: usize,
    pub t_start: i64,
    pub t_end: i64,
    pub entropy: f64,
    pub window: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperedgeExport {
    pub sequence: Vec<Hyperedge>,
    pub video: Vec<Hyperedge>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphExport {
    pub schema_version: u32,
    pub sample_id: String,
    pub labels: Vec<u8>,
    pub nodes: Vec<NodeExport>,
    pub hyperedges: HyperedgeExport,
    pub cross_edges: Vec<CrossEdge>,
    pub diagnostics: GraphDiagnostics,
}

/// Builds one graph per sample in parallel, preserving order. All samples
/// must share feature widths and label counts.
pub fn build_graphs(samples: &[AssembledSample], cfg: &GraphConfig) -> Result<Vec<HybridGraph>> {
    use rayon::prelude::*;
    let graphs: Vec<HybridGraph> = samples
        .par_iter()
        .map(|s| build_hybrid_graph(s, cfg))
        .collect::<Result<_>>()?;
    if let Some(first) = graphs.first() {
        let key = |g: &HybridGraph| (g.seq_features.cols(), g.video_features.cols(), g.labels.len());
        if let Some(bad) = graphs.iter().find(|g| key(g) != key(first)) {
            return Err(HhnError::Validation(format!(
                "sample '{}' has (seq dim, video dim, labels) = {:?}, expected {:?}",
                bad.sample_id,
                key(bad),
                key(first)
            )));
        }
    }
    Ok(graphs)
}

/// Loads a manifest and builds the graph of every sample it lists.
pub fn load_graphs(manifest: impl AsRef<std::path::Path>, cfg: &GraphConfig) -> Result<Vec<HybridGraph>> {
    use rayon::prelude::*;
    let entries = crate::ingest::load_manifest(manifest)?;
    let samples: Vec<AssembledSample> = entries
        .par_iter()
        .map(crate::ingest::assemble_sample)
        .collect::<Result<_>>()?;
    build_graphs(&samples, cfg)
}
