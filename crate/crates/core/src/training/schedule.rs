use serde::{Deserialize, Serialize};

/// Linear warmup, then step decay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub base_lr: f64,
    pub warmup: usize,
    pub decay_factor: f64,
    pub decay_every: usize,
}

impl LrSchedule {
    /// Learning rate for 0-based iteration `t`.
    pub fn lr(&self, t: usize) -> f64 {
        if t < self.warmup {
            return self.base_lr * (t + 1) as f64 / self.warmup as f64;
        }
        let decays = if self.decay_every == 0 {
            0
        } else {
            (t - self.warmup) / self.decay_every
        };
        self.base_lr * self.decay_factor.powi(decays.min(i32::MAX as usize) as i32)
    }
}
