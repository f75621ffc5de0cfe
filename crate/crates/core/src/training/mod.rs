//! Focal loss, Adam, the learning-rate schedule, ranking metrics and the
//! mini-batch training loop.

mod adam;
mod loss;
mod metrics;
mod schedule;
mod trainer;

pub use adam::{adam_step, AdamParams};
pub use loss::{focal_loss, focal_loss_grad, focal_term, focal_term_grad, PROB_CLAMP};
pub use metrics::{average_precision, class_metrics, roc_auc, ClassMetrics, LossPoint, MetricsReport};
pub use schedule::LrSchedule;
pub use trainer::{evaluate, predict_all, train, TrainConfig, TrainOutcome};
