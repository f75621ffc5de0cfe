//! The fusion network: per-modality hypergraph convolutions, cross-modal
//! attention into the sequence stream, pooled readout and a classifier head.
//!
//! Every layer has a hand-written backward pass; `network` chains them.

mod checkpoint;
mod config;
mod layers;
mod network;
mod state;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use config::{HeadKind, HhnConfig, ModalityMode};
pub use layers::{gat_backward, gat_forward, gat_layer, hgnn_backward, hgnn_forward, hgnn_layer, GatCache, GatGrads, GatParams, HgnnCache};
pub use network::{classify, forward_pass, loss_and_grad, predict, readout, ForwardOutput, SampleGrad};
pub use state::{ModelState, ParamSlot, TAIL_PARAMS, PARAMS_PER_LAYER};
