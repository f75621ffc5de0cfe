use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::HhnConfig;
use crate::error::{HhnError, Result};
use crate::kernel::{DenseMatrix, ParamTensor};

pub const PARAMS_PER_LAYER: usize = 6;
pub const TAIL_PARAMS: usize = 4;

/// Position of a parameter inside a layer block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSlot {
    ThetaVideo = 0,
    ThetaSeq = 1,
    AttnSrcProj = 2,
    AttnDstProj = 3,
    AttnSrcVec = 4,
    AttnDstVec = 5,
}

/// All learnable tensors in declaration order: for each layer
/// `theta_v, theta_s, w_src, w_dst, a_src, a_dst`, then
/// `p_s, p_v, classifier_w, classifier_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub params: Vec<ParamTensor>,
    n_layers: usize,
}

fn expected_shapes(cfg: &HhnConfig) -> Vec<(String, (usize, usize))> {
    let h = cfg.hidden_dim;
    let mut out = Vec::new();
    for l in 0..cfg.n_layers {
        let (ds, dv) = if l == 0 {
            (cfg.seq_dim, cfg.video_dim)
        } else {
            (h, h)
        };
        let p = |n: &str| format!("layer{}.{n}", l + 1);
        out.push((p("theta_v"), (dv, h)));
        out.push((p("theta_s"), (ds + h, h)));
        out.push((p("w_src"), (dv, h)));
        out.push((p("w_dst"), (ds, h)));
        out.push((p("a_src"), (h, 1)));
        out.push((p("a_dst"), (h, 1)));
    }
    out.push(("readout.p_s".into(), (1, h)));
    out.push(("readout.p_v".into(), (1, h)));
    out.push(("head.weight".into(), (h, cfg.n_classes)));
    out.push(("head.bias".into(), (1, cfg.n_classes)));
    out
}

impl ModelState {
    /// Glorot-uniform weights, unit readout vectors, zero bias.
    pub fn init(cfg: &HhnConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shapes = expected_shapes(cfg);
        let params = shapes
            .into_iter()
            .map(|(name, (r, c))| {
                let value = if name.starts_with("readout.") {
                    DenseMatrix::filled(r, c, 1.0)
                } else if name == "head.bias" {
                    DenseMatrix::zeros(r, c)
                } else {
                    let limit = (6.0 / (r + c) as f64).sqrt();
                    let v = (0..r * c).map(|_| rng.random_range(-limit..limit)).collect();
                    DenseMatrix::from_vec(r, c, v).expect("finite init")
                };
                ParamTensor::new(name, value)
            })
            .collect();
        Ok(Self {
            params,
            n_layers: cfg.n_layers,
        })
    }

    /// Rebuilds a state from raw tensors (e.g. a checkpoint), checking shapes.
    pub fn from_values(cfg: &HhnConfig, values: Vec<DenseMatrix>) -> Result<Self> {
        cfg.validate()?;
        let shapes = expected_shapes(cfg);
        if shapes.len() != values.len() {
            return Err(HhnError::Validation(format!(
                "expected {} tensors for this configuration, got {}",
                shapes.len(),
                values.len()
            )));
        }
        let params = shapes
            .into_iter()
            .zip(values)
            .map(|((name, shape), v)| {
                if v.shape() != shape {
                    return Err(HhnError::Validation(format!(
                        "tensor {name}: expected shape {shape:?}, got {:?}",
                        v.shape()
                    )));
                }
                Ok(ParamTensor::new(name, v))
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            params,
            n_layers: cfg.n_layers,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    #[inline]
    pub fn layer_index(layer: usize, slot: ParamSlot) -> usize {
        layer * PARAMS_PER_LAYER + slot as usize
    }

    #[inline]
    pub fn layer(&self, layer: usize, slot: ParamSlot) -> &DenseMatrix {
        &self.params[Self::layer_index(layer, slot)].value
    }

    fn tail(&self, k: usize) -> usize {
        self.n_layers * PARAMS_PER_LAYER + k
    }

    pub fn p_s_index(&self) -> usize {
        self.tail(0)
    }

    pub fn p_v_index(&self) -> usize {
        self.tail(1)
    }

    pub fn head_w_index(&self) -> usize {
        self.tail(2)
    }

    pub fn head_b_index(&self) -> usize {
        self.tail(3)
    }

    pub fn zero_grads(&mut self) {
        self.params.iter_mut().for_each(ParamTensor::zero_grad);
    }

    /// Zero gradient buffers shaped like the parameters.
    pub fn grad_buffers(&self) -> Vec<DenseMatrix> {
        self.params
            .iter()
            .map(|p| DenseMatrix::zeros(p.value.rows(), p.value.cols()))
            .collect()
    }

    pub fn values(&self) -> Vec<DenseMatrix> {
        self.params.iter().map(|p| p.value.clone()).collect()
    }

    pub fn n_scalars(&self) -> usize {
        self.params.iter().map(ParamTensor::len).sum()
    }
}
