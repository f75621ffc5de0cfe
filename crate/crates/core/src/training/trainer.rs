use log::{debug, info};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamParams};
use super::loss::focal_loss;
use super::metrics::{class_metrics, LossPoint, MetricsReport};
use super::schedule::LrSchedule;
use crate::error::{HhnError, Result};
use crate::graph::HybridGraph;
use crate::kernel::DenseMatrix;
use crate::model::{loss_and_grad, predict, HhnConfig, ModelState, SampleGrad};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub iterations: usize,
    pub warmup: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub decay_factor: f64,
    pub decay_every: usize,
    pub seed: u64,
    pub eval_every: usize,
    /// Share of the training samples held out for checkpoint selection.
    pub validation_fraction: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 10_000,
            warmup: 1_000,
            batch_size: 128,
            lr: 1e-3,
            decay_factor: 0.1,
            decay_every: 250,
            seed: 0,
            eval_every: 100,
            validation_fraction: 0.1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(HhnError::Config("iterations must be >= 1".into()));
        }
        if self.warmup > self.iterations {
            return Err(HhnError::Config(format!(
                "warmup ({}) exceeds iterations ({})",
                self.warmup, self.iterations
            )));
        }
        if self.batch_size < 1 {
            return Err(HhnError::Config("batch size must be >= 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(HhnError::Config(format!("learning rate must be > 0, got {}", self.lr)));
        }
        if !(self.decay_factor > 0.0 && self.decay_factor <= 1.0) {
            return Err(HhnError::Config("decay factor must lie in (0, 1]".into()));
        }
        if self.eval_every < 1 {
            return Err(HhnError::Config("eval_every must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(HhnError::Config("validation fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            base_lr: self.lr,
            warmup: self.warmup,
            decay_factor: self.decay_factor,
            decay_every: self.decay_every,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best state by validation mAP (the final state without a validation split).
    pub state: ModelState,
    pub report: MetricsReport,
}

/// Class probabilities for every graph, in order.
pub fn predict_all(graphs: &[HybridGraph], state: &ModelState, model: &HhnConfig) -> Result<Vec<Vec<f64>>> {
    graphs.par_iter().map(|g| predict(g, state, model)).collect()
}

/// Mean focal loss and ranking metrics of `state` on `graphs`.
pub fn evaluate(graphs: &[HybridGraph], state: &ModelState, model: &HhnConfig) -> Result<MetricsReport> {
    let probs = predict_all(graphs, state, model)?;
    let labels: Vec<Vec<u8>> = graphs.iter().map(|g| g.labels.clone()).collect();
    let mut loss = 0.0;
    for (p, y) in probs.iter().zip(&labels) {
        loss += focal_loss(
            &DenseMatrix::row_vector(p.clone()),
            &DenseMatrix::row_vector(y.iter().map(|&v| v as f64).collect()),
            model.head,
        )?;
    }
    Ok(MetricsReport {
        n_samples: graphs.len(),
        classes: class_metrics(&probs, &labels),
        eval_loss: loss / graphs.len().max(1) as f64,
        final_loss: None,
        best_iteration: None,
        loss_curve: Vec::new(),
    })
}

fn split(n: usize, cfg: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    if cfg.validation_fraction <= 0.0 || n < 2 {
        return (idx, Vec::new());
    }
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7a11_da7e));
    let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1);
    let val = idx.split_off(n - n_val);
    (idx, val)
}

struct Batcher {
    order: Vec<usize>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl Batcher {
    fn next(&mut self, size: usize) -> Vec<usize> {
        let size = size.min(self.order.len());
        if self.cursor + size > self.order.len() {
            self.order.shuffle(&mut self.rng);
            self.cursor = 0;
        }
        let out = self.order[self.cursor..self.cursor + size].to_vec();
        self.cursor += size;
        out
    }
}

fn batch_gradient(
    graphs: &[HybridGraph],
    batch: &[usize],
    state: &ModelState,
    model: &HhnConfig,
) -> Result<(f64, Vec<DenseMatrix>)> {
    let parts: Vec<SampleGrad> = batch
        .par_iter()
        .map(|&i| loss_and_grad(&graphs[i], state, model))
        .collect::<Result<_>>()?;
    let mut grads = state.grad_buffers();
    let mut loss = 0.0;
    for part in &parts {
        loss += part.loss;
        for (acc, g) in grads.iter_mut().zip(&part.grads) {
            acc.add_assign(g)?;
        }
    }
    let scale = 1.0 / batch.len() as f64;
    grads.iter_mut().for_each(|g| *g = g.scale(scale));
    Ok((loss * scale, grads))
}

/// Mini-batch Adam on the focal loss. Deterministic for a given seed
/// regardless of thread count.
pub fn train(graphs: &[HybridGraph], model: &HhnConfig, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    if graphs.is_empty() {
        return Err(HhnError::Validation("training set is empty".into()));
    }
    let (fit_idx, val_idx) = split(graphs.len(), cfg);
    let fit: Vec<HybridGraph> = fit_idx.iter().map(|&i| graphs[i].clone()).collect();
    let val: Vec<HybridGraph> = val_idx.iter().map(|&i| graphs[i].clone()).collect();
    info!(
        "training on {} samples, {} held out for validation",
        fit.len(),
        val.len()
    );

    let mut state = ModelState::init(model, cfg.seed)?;
    let schedule = cfg.schedule();
    let mut batcher = Batcher {
        order: (0..fit.len()).collect(),
        cursor: usize::MAX / 2,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xba7c_4e5),
    };
    let mut curve = Vec::with_capacity(cfg.iterations);
    let mut best: Option<(f64, usize, ModelState)> = None;

    for t in 0..cfg.iterations {
        let batch = batcher.next(cfg.batch_size);
        let (loss, grads) = match batch_gradient(&fit, &batch, &state, model) {
            Err(HhnError::NonFinite(_)) => return Err(HhnError::Divergence { iteration: t, loss: f64::NAN }),
            other => other?,
        };
        if !loss.is_finite() {
            return Err(HhnError::Divergence { iteration: t, loss });
        }
        curve.push(LossPoint { iteration: t, loss });
        for (p, g) in state.params.iter_mut().zip(grads) {
            p.grad = g;
        }
        adam_step(&mut state, schedule.lr(t), AdamParams::default(), t as u64 + 1)?;

        let last = t + 1 == cfg.iterations;
        if !val.is_empty() && ((t + 1) % cfg.eval_every == 0 || last) {
            let r = evaluate(&val, &state, model)?;
            let score = r.classes.map.unwrap_or(-r.eval_loss);
            info!(
                "iter {:>6}  lr {:.2e}  loss {:.5}  val loss {:.5}  val mAP {}",
                t + 1,
                schedule.lr(t),
                loss,
                r.eval_loss,
                r.classes.map.map_or("n/a".into(), |m| format!("{m:.4}"))
            );
            if best.as_ref().map_or(true, |b| score > b.0) {
                best = Some((score, t + 1, state.clone()));
            }
        } else {
            debug!("iter {:>6}  loss {:.5}", t + 1, loss);
        }
    }

    let final_loss = curve.last().map(|p| p.loss);
    let (state, best_iteration) = match best {
        Some((_, it, s)) => (s, Some(it)),
        None => (state, None),
    };
    let eval_on = if val.is_empty() { &fit } else { &val };
    let mut report = evaluate(eval_on, &state, model)?;
    report.final_loss = final_loss;
    report.best_iteration = best_iteration;
    report.loss_curve = curve;
    Ok(TrainOutcome { state, report })
}
