use super::ParamTensor;
use crate::error::{HhnError, Result};

/// Gradients smaller than this are compared in absolute terms.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub tensor: String,
    pub row: usize,
    pub col: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: Option<GradEntry>,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// Compares `params[*].grad` against central differences of `f`.
///
/// Every parameter entry is perturbed by `±eps` in turn and restored afterwards.
pub fn finite_diff_grad_check<F>(
    params: &mut [ParamTensor],
    eps: f64,
    tol: f64,
    mut f: F,
) -> Result<GradCheckReport>
where
    F: FnMut(&[ParamTensor]) -> Result<f64>,
{
    if !(1e-7..=1e-3).contains(&eps) {
        return Err(HhnError::Config(format!(
            "finite-difference eps {eps} outside [1e-7, 1e-3]"
        )));
    }
    let mut eval = |params: &[ParamTensor]| -> Result<f64> {
        let v = f(params)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(HhnError::NonFinite(format!("objective evaluated to {v}")))
        }
    };

    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        worst: None,
        passed: true,
    };
    for t in 0..params.len() {
        let cols = params[t].value.cols();
        for idx in 0..params[t].len() {
            let orig = params[t].value.values()[idx];
            params[t].value.values_mut()[idx] = orig + eps;
            let plus = eval(params);
            params[t].value.values_mut()[idx] = orig - eps;
            let minus = eval(params);
            params[t].value.values_mut()[idx] = orig;
            let numeric = (plus? - minus?) / (2.0 * eps);
            let analytic = params[t].grad.values()[idx];
            let rel = relative_error(analytic, numeric);
            report.checked += 1;
            if rel > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(rel);
                report.worst = Some(GradEntry {
                    tensor: params[t].name.clone(),
                    row: idx / cols.max(1),
                    col: idx % cols.max(1),
                    analytic,
                    numeric,
                    rel_error: rel,
                });
            }
        }
    }
    report.passed = report.max_rel_error <= tol;
    Ok(report)
}
