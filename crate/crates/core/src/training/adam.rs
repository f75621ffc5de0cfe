use crate::error::{HhnError, Result};
use crate::model::ModelState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One bias-corrected Adam update using the gradients stored in `state`,
/// which are zeroed afterwards. `step` is 1-based.
pub fn adam_step(state: &mut ModelState, lr: f64, adam: AdamParams, step: u64) -> Result<()> {
    assert!(step >= 1, "Adam steps are 1-based");
    if let Some(bad) = state.params.iter().find(|p| !p.grad.is_finite()) {
        return Err(HhnError::NonFinite(format!("gradient of parameter '{}'", bad.name)));
    }
    let t = step.min(i32::MAX as u64) as i32;
    let c1 = 1.0 - adam.beta1.powi(t);
    let c2 = 1.0 - adam.beta2.powi(t);
    for p in &mut state.params {
        let values = p.value.values_mut();
        let grads = p.grad.values();
        let m1 = p.moment1.values_mut();
        let m2 = p.moment2.values_mut();
        for i in 0..values.len() {
            let g = grads[i];
            m1[i] = adam.beta1 * m1[i] + (1.0 - adam.beta1) * g;
            m2[i] = adam.beta2 * m2[i] + (1.0 - adam.beta2) * g * g;
            let m_hat = m1[i] / c1;
            let v_hat = m2[i] / c2;
            values[i] -= lr * m_hat / (v_hat.sqrt() + adam.eps);
        }
        p.zero_grad();
    }
    Ok(())
}
