use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Indices sorted by descending score; equal scores keep input order.
fn ranked(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Mean of precision@k over the ranks of the positives. `None` when there
/// are no positives.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 {
        return None;
    }
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (k, &i) in ranked(scores).iter().enumerate() {
        if labels[i] {
            hits += 1;
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    Some(sum / n_pos as f64)
}

/// Area under the ROC curve via the rank-sum statistic, ties counted half.
/// `None` unless both classes are present.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), labels.len());
    let n_pos = labels.iter().filter(|&&y| y).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && scores[idx[j + 1]] == scores[idx[i]] {
            j += 1;
        }
        let avg_rank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += avg_rank * idx[i..=j].iter().filter(|&&k| labels[k]).count() as f64;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Some(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    pub iteration: usize,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub per_class_ap: Vec<Option<f64>>,
    pub map: Option<f64>,
    pub per_class_auc: Vec<Option<f64>>,
    pub macro_auc: Option<f64>,
    /// Classes left out of the mAP (no positives).
    pub skipped_ap: Vec<usize>,
    /// Classes left out of the macro AUC (a single outcome only).
    pub skipped_auc: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_samples: usize,
    #[serde(flatten)]
    pub classes: ClassMetrics,
    pub eval_loss: f64,
    pub final_loss: Option<f64>,
    pub best_iteration: Option<usize>,
    pub loss_curve: Vec<LossPoint>,
}

fn mean_present(values: &[Option<f64>]) -> Option<f64> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64)
}

/// Per-class and averaged AP/AUC. `scores[s][c]` is the score of class `c`
/// for sample `s`.
pub fn class_metrics(scores: &[Vec<f64>], labels: &[Vec<u8>]) -> ClassMetrics {
    assert_eq!(scores.len(), labels.len());
    let n_classes = scores.first().map_or(0, Vec::len);
    let per_class: Vec<(Option<f64>, Option<f64>)> = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            let s: Vec<f64> = scores.iter().map(|row| row[c]).collect();
            let y: Vec<bool> = labels.iter().map(|row| row[c] == 1).collect();
            (average_precision(&s, &y), roc_auc(&s, &y))
        })
        .collect();
    let per_class_ap: Vec<Option<f64>> = per_class.iter().map(|p| p.0).collect();
    let per_class_auc: Vec<Option<f64>> = per_class.iter().map(|p| p.1).collect();
    let skipped = |v: &[Option<f64>]| v.iter().enumerate().filter(|(_, x)| x.is_none()).map(|(c, _)| c).collect();
    ClassMetrics {
        map: mean_present(&per_class_ap),
        macro_auc: mean_present(&per_class_auc),
        skipped_ap: skipped(&per_class_ap),
        skipped_auc: skipped(&per_class_auc),
        per_class_ap,
        per_class_auc,
    }
}

impl MetricsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Loss curve as `iteration,loss` lines.
    pub fn loss_curve_csv(&self) -> String {
        let mut out = String::from("iteration,loss\n");
        for p in &self.loss_curve {
            out.push_str(&format!("{},{}\n", p.iteration, p.loss));
        }
        out
    }
}
