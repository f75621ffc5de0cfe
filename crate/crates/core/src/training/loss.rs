//! Focal loss with `gamma = 2` on the predicted probability of the true outcome.

use crate::error::{HhnError, Result};
use crate::kernel::DenseMatrix;
use crate::model::HeadKind;

pub const PROB_CLAMP: f64 = 1e-7;

#[inline]
fn clamp(p: f64) -> f64 {
    p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// `-(1 - p)^2 ln p` on the clamped probability.
#[inline]
pub fn focal_term(p: f64) -> f64 {
    let p = clamp(p);
    -(1.0 - p).powi(2) * p.ln()
}

/// Derivative of [`focal_term`]; zero where the clamp is active.
#[inline]
pub fn focal_term_grad(p: f64) -> f64 {
    if !(PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&p) {
        return 0.0;
    }
    2.0 * (1.0 - p) * p.ln() - (1.0 - p).powi(2) / p
}

fn check(probs: &DenseMatrix, labels: &DenseMatrix) -> Result<()> {
    if probs.shape() != labels.shape() {
        return Err(HhnError::Dimension {
            op: "focal_loss",
            lhs: probs.shape(),
            rhs: labels.shape(),
        });
    }
    Ok(())
}

/// Batch-mean focal loss. With a softmax head only positive classes
/// contribute; with a sigmoid head each class is a binary problem whose
/// true outcome is `p` for positives and `1 - p` for negatives.
pub fn focal_loss(probs: &DenseMatrix, labels: &DenseMatrix, head: HeadKind) -> Result<f64> {
    check(probs, labels)?;
    let mut total = 0.0;
    for (p, &y) in probs.values().iter().zip(labels.values()) {
        total += match head {
            HeadKind::SinglelabelSoftmax if y > 0.5 => focal_term(*p),
            HeadKind::SinglelabelSoftmax => 0.0,
            HeadKind::MultilabelSigmoid if y > 0.5 => focal_term(*p),
            HeadKind::MultilabelSigmoid => focal_term(1.0 - p),
        };
    }
    Ok(total / probs.rows().max(1) as f64)
}

/// Gradient of [`focal_loss`] with respect to the head's logits.
pub fn focal_loss_grad(probs: &DenseMatrix, labels: &DenseMatrix, head: HeadKind) -> Result<DenseMatrix> {
    check(probs, labels)?;
    let batch = probs.rows().max(1) as f64;
    let mut out = DenseMatrix::zeros(probs.rows(), probs.cols());
    for r in 0..probs.rows() {
        let p = probs.row(r);
        let y = labels.row(r);
        let d = out.row_mut(r);
        match head {
            HeadKind::SinglelabelSoftmax => {
                for c in 0..p.len() {
                    if y[c] <= 0.5 {
                        continue;
                    }
                    let g = focal_term_grad(p[c]) * p[c];
                    for k in 0..p.len() {
                        let delta = if k == c { 1.0 } else { 0.0 };
                        d[k] += g * (delta - p[k]);
                    }
                }
            }
            HeadKind::MultilabelSigmoid => {
                for c in 0..p.len() {
                    let slope = p[c] * (1.0 - p[c]);
                    d[c] = if y[c] > 0.5 {
                        focal_term_grad(p[c]) * slope
                    } else {
                        -focal_term_grad(1.0 - p[c]) * slope
                    };
                }
            }
        }
        d.iter_mut().for_each(|v| *v /= batch);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{rowwise_softmax, sigmoid};

    #[test]
    fn perfect_prediction_is_near_zero() {
        let probs = DenseMatrix::row_vector(vec![1.0 - 1e-7, 1.0 - 1e-7]);
        let labels = DenseMatrix::row_vector(vec![1.0, 1.0]);
        for head in [HeadKind::MultilabelSigmoid, HeadKind::SinglelabelSoftmax] {
            let l = focal_loss(&probs, &labels, head).unwrap();
            assert!((0.0..1e-20).contains(&l), "{l}");
        }
    }

    #[test]
    fn half_probability_positive() {
        let l = focal_loss(
            &DenseMatrix::row_vector(vec![0.5, 0.5]),
            &DenseMatrix::row_vector(vec![1.0, 0.0]),
            HeadKind::SinglelabelSoftmax,
        )
        .unwrap();
        assert!((l - 0.25 * 2f64.ln()).abs() < 1e-15);
        assert!((l - 0.1733).abs() < 1e-4);
    }

    #[test]
    fn clamp_keeps_loss_finite() {
        let l = focal_loss(
            &DenseMatrix::row_vector(vec![0.0]),
            &DenseMatrix::row_vector(vec![1.0]),
            HeadKind::MultilabelSigmoid,
        )
        .unwrap();
        assert!(l.is_finite() && l > 15.0);
    }

    #[test]
    fn shape_mismatch() {
        let e = focal_loss(&DenseMatrix::zeros(1, 2), &DenseMatrix::zeros(1, 3), HeadKind::MultilabelSigmoid);
        assert!(matches!(e, Err(HhnError::Dimension { .. })));
    }

    fn probs_from_logits(z: &DenseMatrix, head: HeadKind) -> DenseMatrix {
        match head {
            HeadKind::SinglelabelSoftmax => rowwise_softmax(z, None).unwrap(),
            HeadKind::MultilabelSigmoid => {
                DenseMatrix::from_vec(z.rows(), z.cols(), z.values().iter().map(|&v| sigmoid(v)).collect()).unwrap()
            }
        }
    }

    #[test]
    fn logit_gradient_matches_finite_differences() {
        let logits = DenseMatrix::from_rows(&[vec![0.3, -1.2, 0.8], vec![-0.4, 0.1, 2.0]]);
        let labels = DenseMatrix::from_rows(&[vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 1.0]]);
        for head in [HeadKind::SinglelabelSoftmax, HeadKind::MultilabelSigmoid] {
            let g = focal_loss_grad(&probs_from_logits(&logits, head), &labels, head).unwrap();
            for idx in 0..6 {
                let mut plus = logits.clone();
                plus.values_mut()[idx] += 1e-6;
                let mut minus = logits.clone();
                minus.values_mut()[idx] -= 1e-6;
                let fd = (focal_loss(&probs_from_logits(&plus, head), &labels, head).unwrap()
                    - focal_loss(&probs_from_logits(&minus, head), &labels, head).unwrap())
                    / 2e-6;
                assert!((fd - g.values()[idx]).abs() < 1e-8, "{head:?} {idx}");
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn loss_is_non_negative(p in 0.0f64..=1.0, y in 0u8..2) {
            let l = focal_loss(
                &DenseMatrix::row_vector(vec![p]),
                &DenseMatrix::row_vector(vec![y as f64]),
                HeadKind::MultilabelSigmoid,
            ).unwrap();
            proptest::prop_assert!(l >= 0.0);
        }
    }
}
