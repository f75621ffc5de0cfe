//! Cross-modal ordinary graph: interval-overlap edges (optionally plus
//! cosine top-k) weighted by an exponential temporal decay.

use serde::{Deserialize, Serialize};

use crate::error::{HhnError, Result};
use crate::ingest::SegmentNode;
use crate::kernel::DenseMatrix;

/// How the temporal weight of an edge `(i, j)` is derived.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalWeighting {
    /// `exp(-(t_max - t_i + 1) / (t_max - t_min + 1))`, depends on `t_i` only.
    #[default]
    Source,
    /// `exp(-(|t_i - t_j| + 1) / (t_max - t_min + 1))`.
    Interval,
}

pub fn hawkes_weight(t_i: i64, t_max: i64, t_min: i64) -> Result<f64> {
    if t_i < t_min || t_i > t_max {
        return Err(HhnError::Validation(format!(
            "timestamp {t_i} outside [{t_min}, {t_max}]"
        )));
    }
    Ok((-((t_max - t_i + 1) as f64) / ((t_max - t_min + 1) as f64)).exp())
}

fn interval_weight(t_i: i64, t_j: i64, t_max: i64, t_min: i64) -> f64 {
    (-(((t_i - t_j).abs() + 1) as f64) / ((t_max - t_min + 1) as f64)).exp()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossEdge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Node indices are `0..n_seq` for sequence nodes followed by
/// `n_seq..n_seq + n_video` for video nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossGraph {
    pub n_seq: usize,
    pub n_video: usize,
    pub adjacency: DenseMatrix,
    pub weights: DenseMatrix,
    pub edges: Vec<CrossEdge>,
}

impl CrossGraph {
    pub fn n_nodes(&self) -> usize {
        self.n_seq + self.n_video
    }

    /// A graph with no cross-modal edges at all.
    pub fn empty(n_seq: usize, n_video: usize) -> Self {
        let n = n_seq + n_video;
        Self {
            n_seq,
            n_video,
            adjacency: DenseMatrix::zeros(n, n),
            weights: DenseMatrix::filled(n, n, 1.0),
            edges: Vec::new(),
        }
    }

    /// For each sequence node, its video neighbours as `(video index, ln W)`.
    pub fn sequence_neighbors(&self) -> Vec<Vec<(usize, f64)>> {
        (0..self.n_seq)
            .map(|i| {
                (0..self.n_video)
                    .filter_map(|j| {
                        let col = self.n_seq + j;
                        let combined = self.adjacency.get(i, col) * self.weights.get(i, col);
                        (combined > 0.0).then(|| (j, self.weights.get(i, col).ln()))
                    })
                    .collect()
            })
            .collect()
    }

    fn rebuild_edges(&mut self) {
        let n = self.n_nodes();
        self.edges.clear();
        for i in 0..n {
            for j in 0..n {
                let combined = self.adjacency.get(i, j) * self.weights.get(i, j);
                if combined > 0.0 {
                    self.edges.push(CrossEdge {
                        from: i,
                        to: j,
                        weight: combined,
                    });
                }
            }
        }
    }
}

fn overlaps(a: &SegmentNode, b: &SegmentNode) -> bool {
    a.t_start < b.t_end && b.t_start < a.t_end
}

/// Mean-pools `v` down to `len` bins so vectors of different widths compare.
fn resample(v: &[f64], len: usize) -> Vec<f64> {
    if v.len() == len {
        return v.to_vec();
    }
    (0..len)
        .map(|k| {
            let lo = k * v.len() / len;
            let hi = ((k + 1) * v.len() / len).max(lo + 1);
            v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect()
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (a, b) = (resample(a, len), resample(b, len));
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn top_k(scores: impl Iterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut ranked: Vec<(usize, f64)> = scores.enumerate().collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.into_iter().take(k).map(|(i, _)| i).collect()
}

pub fn build_cross_graph(
    seq_nodes: &[SegmentNode],
    video_nodes: &[SegmentNode],
    semantic_topk: Option<usize>,
    weighting: TemporalWeighting,
) -> Result<CrossGraph> {
    if seq_nodes.is_empty() || video_nodes.is_empty() {
        return Err(HhnError::Validation(
            "cross-modal graph needs nodes in both modalities".into(),
        ));
    }
    let n_seq = seq_nodes.len();
    let n_video = video_nodes.len();
    let n = n_seq + n_video;
    let all = || seq_nodes.iter().chain(video_nodes);
    let t_min = all().map(|v| v.t_start).min().unwrap();
    let t_max = all().map(|v| v.t_start).max().unwrap();
    let node = |i: usize| {
        if i < n_seq {
            &seq_nodes[i]
        } else {
            &video_nodes[i - n_seq]
        }
    };

    let mut weights = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let w = match weighting {
                TemporalWeighting::Source => hawkes_weight(node(i).t_start, t_max, t_min)?,
                TemporalWeighting::Interval => {
                    interval_weight(node(i).t_start, node(j).t_start, t_max, t_min)
                }
            };
            weights.set(i, j, w);
        }
    }

    let mut adjacency = DenseMatrix::zeros(n, n);
    let mut link = |s: usize, v: usize| {
        adjacency.set(s, n_seq + v, 1.0);
        adjacency.set(n_seq + v, s, 1.0);
    };
    for (s, sn) in seq_nodes.iter().enumerate() {
        for (v, vn) in video_nodes.iter().enumerate() {
            if overlaps(sn, vn) {
                link(s, v);
            }
        }
    }
    if let Some(k) = semantic_topk.filter(|&k| k > 0) {
        for (s, sn) in seq_nodes.iter().enumerate() {
            for v in top_k(video_nodes.iter().map(|vn| cosine(&sn.features, &vn.features)), k) {
                link(s, v);
            }
        }
        for (v, vn) in video_nodes.iter().enumerate() {
            for s in top_k(seq_nodes.iter().map(|sn| cosine(&sn.features, &vn.features)), k) {
                link(s, v);
            }
        }
    }

    let mut g = CrossGraph {
        n_seq,
        n_video,
        adjacency,
        weights,
        edges: Vec::new(),
    };
    g.rebuild_edges();
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ModalityKind;

    fn seg(modality: ModalityKind, index: usize, t_start: i64, t_end: i64) -> SegmentNode {
        SegmentNode {
            modality,
            index,
            t_start,
            t_end,
            features: vec![index as f64, 1.0],
        }
    }

    #[test]
    fn hawkes_examples() {
        assert!((hawkes_weight(9, 9, 0).unwrap() - (-0.1f64).exp()).abs() < 1e-15);
        assert!((hawkes_weight(9, 9, 0).unwrap() - 0.9048).abs() < 1e-4);
        assert!((hawkes_weight(0, 9, 0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        assert_eq!(hawkes_weight(5, 5, 5).unwrap(), (-1.0f64).exp());
        assert!(hawkes_weight(10, 9, 0).is_err());
        assert!(hawkes_weight(-1, 9, 0).is_err());
    }

    #[test]
    fn full_overlap_one_edge_each_way() {
        let g = build_cross_graph(
            &[seg(ModalityKind::Sequence, 0, 0, 250)],
            &[seg(ModalityKind::Video, 0, 0, 250)],
            None,
            TemporalWeighting::Source,
        )
        .unwrap();
        assert_eq!(g.edges.len(), 2);
        let w = hawkes_weight(0, 0, 0).unwrap();
        assert!(g.edges.iter().all(|e| e.weight == w));
        assert_eq!((g.edges[0].from, g.edges[0].to), (0, 1));
        assert_eq!((g.edges[1].from, g.edges[1].to), (1, 0));
    }

    #[test]
    fn disjoint_intervals_have_no_edges() {
        let g = build_cross_graph(
            &[seg(ModalityKind::Sequence, 0, 0, 250)],
            &[seg(ModalityKind::Video, 0, 250, 500)],
            None,
            TemporalWeighting::Source,
        )
        .unwrap();
        assert!(g.edges.is_empty());
        assert!(g.sequence_neighbors()[0].is_empty());
    }

    #[test]
    fn semantic_topk_adds_edges() {
        let g = build_cross_graph(
            &[seg(ModalityKind::Sequence, 0, 0, 250), seg(ModalityKind::Sequence, 1, 250, 500)],
            &[seg(ModalityKind::Video, 0, 1000, 1250)],
            Some(1),
            TemporalWeighting::Source,
        )
        .unwrap();
        assert!(!g.edges.is_empty());
        for e in &g.edges {
            assert!((e.from < 2) != (e.to < 2), "edge must cross modalities");
        }
    }

    #[test]
    fn standard_layout_every_video_node_overlaps() {
        let seq: Vec<_> = (0..101)
            .map(|i| seg(ModalityKind::Sequence, i, i as i64 * 196, i as i64 * 196 + 960))
            .collect();
        let video: Vec<_> = (0..40)
            .map(|j| seg(ModalityKind::Video, j, j as i64 * 250, j as i64 * 250 + 250))
            .collect();
        let g = build_cross_graph(&seq, &video, None, TemporalWeighting::Source).unwrap();
        // interval sweep oracle
        for v in &video {
            let hits = seq
                .iter()
                .filter(|s| s.t_start.max(v.t_start) < s.t_end.min(v.t_end))
                .count();
            assert!(hits >= 1);
            let degree = (0..101).filter(|&s| g.adjacency.get(s, 101 + v.index) > 0.0).count();
            assert_eq!(degree, hits);
        }
        for i in 0..141 {
            for j in 0..141 {
                if (i < 101) == (j < 101) {
                    assert_eq!(g.adjacency.get(i, j), 0.0);
                }
                let w = g.weights.get(i, j);
                assert!(w > 0.0 && w <= 1.0);
            }
        }
        let listed = g.edges.len();
        let positive = g.adjacency.values().iter().filter(|&&a| a > 0.0).count();
        assert_eq!(listed, positive);
    }

    #[test]
    fn interval_weighting_prefers_close_neighbours() {
        let seq = [seg(ModalityKind::Sequence, 0, 0, 1000)];
        let video = [seg(ModalityKind::Video, 0, 0, 250), seg(ModalityKind::Video, 1, 500, 750)];
        let g = build_cross_graph(&seq, &video, None, TemporalWeighting::Interval).unwrap();
        let nb = &g.sequence_neighbors()[0];
        assert_eq!(nb.len(), 2);
        assert!(nb[0].1 > nb[1].1);
    }

    proptest::proptest! {
        #[test]
        fn hawkes_monotone(t_min in -1000i64..1000, span in 0i64..5000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let t_max = t_min + span;
            let ta = t_min + (a * span as f64) as i64;
            let tb = t_min + (b * span as f64) as i64;
            let (wa, wb) = (hawkes_weight(ta, t_max, t_min).unwrap(), hawkes_weight(tb, t_max, t_min).unwrap());
            proptest::prop_assert!(wa > 0.0 && wa < 1.0);
            if ta < tb { proptest::prop_assert!(wa < wb); }
        }
    }

    proptest::proptest! {
        #[test]
        fn bipartite_and_edge_list_matches_weights(
            seq in proptest::collection::vec((0i64..50, 1i64..20), 1..12),
            video in proptest::collection::vec((0i64..50, 1i64..20), 1..8),
            topk in proptest::option::of(0usize..4),
        ) {
            let mk = |kind, v: &[(i64, i64)]| -> Vec<SegmentNode> {
                let mut start = 0;
                v.iter().enumerate().map(|(i, &(gap, len))| {
                    start += gap + 1;
                    let mut n = seg(kind, i, start, start + len);
                    n.features = vec![(i as f64).sin(), (i as f64 * 0.3).cos(), 0.5];
                    n
                }).collect()
            };
            let (s, v) = (mk(ModalityKind::Sequence, &seq), mk(ModalityKind::Video, &video));
            let g = build_cross_graph(&s, &v, topk, TemporalWeighting::Source).unwrap();
            let n_seq = s.len();
            let mut positive = 0;
            for i in 0..g.n_nodes() {
                for j in 0..g.n_nodes() {
                    let a = g.adjacency.get(i, j);
                    proptest::prop_assert_eq!(a, g.adjacency.get(j, i));
                    if (i < n_seq) == (j < n_seq) {
                        proptest::prop_assert_eq!(a, 0.0);
                    }
                    if a > 0.0 {
                        positive += 1;
                    }
                }
            }
            proptest::prop_assert_eq!(positive, g.edges.len());
            for e in &g.edges {
                proptest::prop_assert!(e.weight > 0.0);
                proptest::prop_assert!(g.adjacency.get(e.from, e.to) > 0.0);
            }
        }
    }
}
