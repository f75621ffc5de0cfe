//! Node entropy and the entropy-adaptive window radius.
//!
//! A node's feature vector is turned into a distribution with a softmax and
//! its Shannon entropy (nats) scales the temporal radius from which hyperedge
//! members are drawn: `R(v) = floor(r_min + alpha * H(v) / mean(H))`.

use serde::{Deserialize, Serialize};

use crate::error::{HhnError, Result};
use crate::ingest::SegmentNode;

/// Softmax probabilities below this contribute nothing to the entropy.
const NEGLIGIBLE_PROB: f64 = 1e-15;
/// Mean entropies below this fall back to `r_min` everywhere.
const DEGENERATE_MEAN: f64 = 1e-12;
/// Absorbs rounding in `H / mean(H)` so that a ratio of exactly one floors as one.
const FLOOR_SLACK: f64 = 1e-9;

pub fn node_entropy(features: &[f64]) -> Result<f64> {
    if features.is_empty() {
        return Err(HhnError::Validation("entropy of an empty feature vector".into()));
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(HhnError::NonFinite("feature vector for entropy".into()));
    }
    let max = features.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = features.iter().map(|v| (v - max).exp()).sum();
    let log_total = total.ln();
    let mut h = 0.0;
    for v in features {
        let log_p = v - max - log_total;
        let p = log_p.exp();
        if p >= NEGLIGIBLE_PROB {
            h -= p * log_p;
        }
    }
    Ok(h.max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub entropies: Vec<f64>,
    pub mean: f64,
    pub windows: Vec<usize>,
    pub r_min: usize,
    pub alpha: f64,
}

impl EntropyProfile {
    pub fn from_entropies(entropies: Vec<f64>, r_min: usize, alpha: f64) -> Result<Self> {
        if entropies.is_empty() {
            return Err(HhnError::Validation("entropy profile over zero nodes".into()));
        }
        if r_min < 1 {
            return Err(HhnError::Config("r_min must be >= 1".into()));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(HhnError::Config(format!("alpha must be >= 0, got {alpha}")));
        }
        let mean = entropies.iter().sum::<f64>() / entropies.len() as f64;
        let windows = entropies
            .iter()
            .map(|&h| {
                if mean < DEGENERATE_MEAN {
                    r_min
                } else {
                    (r_min as f64 + alpha * h / mean + FLOOR_SLACK).floor() as usize
                }
            })
            .collect();
        Ok(Self {
            entropies,
            mean,
            windows,
            r_min,
            alpha,
        })
    }

    pub fn len(&self) -> usize {
        self.entropies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entropies.is_empty()
    }
}

pub fn entropy_profile(nodes: &[SegmentNode], r_min: usize, alpha: f64) -> Result<EntropyProfile> {
    let entropies = nodes
        .iter()
        .map(|n| node_entropy(&n.features))
        .collect::<Result<Vec<_>>>()?;
    EntropyProfile::from_entropies(entropies, r_min, alpha)
}

/// Candidate neighbours of node `i`: indices at temporal distance
/// `hop, 2*hop, ...` up to `R(v_i)` on both sides, clipped to `[0, n_nodes)`.
pub fn adaptive_window(profile: &EntropyProfile, i: usize, n_nodes: usize, hop: usize) -> Vec<usize> {
    assert!(i < n_nodes, "node {i} out of range {n_nodes}");
    window_indices(i, profile.windows[i], n_nodes, hop)
}

pub fn window_indices(i: usize, radius: usize, n_nodes: usize, hop: usize) -> Vec<usize> {
    let hop = hop.max(1);
    let mut left: Vec<usize> = (hop..=radius)
        .step_by(hop)
        .filter_map(|d| i.checked_sub(d))
        .collect();
    left.reverse();
    let right = (hop..=radius)
        .step_by(hop)
        .map(|d| i + d)
        .filter(|&j| j < n_nodes);
    left.extend(right);
    left
}
