use serde::{Deserialize, Serialize};

use super::blob::read_feature_blob;
use super::manifest::{ModalityKind, SampleManifest};
use crate::error::{HhnError, Result};
use crate::kernel::DenseMatrix;

/// One timestamped feature vector of one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentNode {
    pub modality: ModalityKind,
    pub index: usize,
    pub t_start: i64,
    pub t_end: i64,
    pub features: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssembledSample {
    pub sample_id: String,
    pub sequence: Vec<SegmentNode>,
    pub video: Vec<SegmentNode>,
    pub labels: Vec<u8>,
}

impl AssembledSample {
    pub fn nodes(&self, kind: ModalityKind) -> &[SegmentNode] {
        match kind {
            ModalityKind::Sequence => &self.sequence,
            ModalityKind::Video => &self.video,
        }
    }
}

/// Pairs feature row `i` with timing row `i` and checks the timing invariants.
pub fn segments_from_matrix(
    kind: ModalityKind,
    features: &DenseMatrix,
    t_start: &[i64],
    t_end: &[i64],
) -> Result<Vec<SegmentNode>> {
    if features.rows() != t_start.len() || t_start.len() != t_end.len() {
        return Err(HhnError::Validation(format!(
            "{kind}: blob has {} rows but timing table has {} entries",
            features.rows(),
            t_start.len()
        )));
    }
    if features.rows() == 0 {
        return Err(HhnError::Validation(format!("{kind}: no segments")));
    }
    let mut nodes = Vec::with_capacity(features.rows());
    for i in 0..features.rows() {
        if t_end[i] <= t_start[i] {
            return Err(HhnError::Validation(format!(
                "{kind} segment {i}: t_end {} <= t_start {}",
                t_end[i], t_start[i]
            )));
        }
        if i > 0 && t_start[i] <= t_start[i - 1] {
            return Err(HhnError::Validation(format!(
                "{kind} segment {i}: t_start {} not after previous {}",
                t_start[i],
                t_start[i - 1]
            )));
        }
        nodes.push(SegmentNode {
            modality: kind,
            index: i,
            t_start: t_start[i],
            t_end: t_end[i],
            features: features.row(i).to_vec(),
        });
    }
    Ok(nodes)
}

pub fn assemble_sample(manifest: &SampleManifest) -> Result<AssembledSample> {
    let load = |kind: ModalityKind| -> Result<Vec<SegmentNode>> {
        let entry = manifest.modalities.get(kind);
        let features = read_feature_blob(&entry.blob)?;
        segments_from_matrix(kind, &features, &entry.t_start, &entry.t_end).map_err(|e| {
            HhnError::Validation(format!("sample '{}': {e}", manifest.sample_id))
        })
    };
    Ok(AssembledSample {
        sample_id: manifest.sample_id.clone(),
        sequence: load(ModalityKind::Sequence)?,
        video: load(ModalityKind::Video)?,
        labels: manifest.labels.clone(),
    })
}

/// Stacks node features back into a matrix (row `i` = node `i`).
pub fn feature_matrix(nodes: &[SegmentNode]) -> DenseMatrix {
    let cols = nodes.first().map_or(0, |n| n.features.len());
    let mut values = Vec::with_capacity(nodes.len() * cols);
    for n in nodes {
        assert_eq!(n.features.len(), cols, "ragged node features");
        values.extend_from_slice(&n.features);
    }
    DenseMatrix::from_vec(nodes.len(), cols, values).expect("node features are finite")
}
