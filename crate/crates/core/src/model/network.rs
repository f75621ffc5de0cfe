use super::config::{HeadKind, HhnConfig};
use super::layers::{gat_backward, gat_forward, hgnn_backward, hgnn_forward, GatCache, GatParams, HgnnCache};
use super::state::{ModelState, ParamSlot};
use crate::error::{HhnError, Result};
use crate::graph::HybridGraph;
use crate::kernel::{concat_cols, matmul, matmul_nt, matmul_tn, rowwise_softmax, sigmoid, DenseMatrix};
use crate::training::{focal_loss, focal_loss_grad};

/// Final node embeddings of each active stream.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub zs: Option<DenseMatrix>,
    pub zv: Option<DenseMatrix>,
}

struct LayerCache {
    zs_in: Option<DenseMatrix>,
    zv_in: Option<DenseMatrix>,
    video: Option<HgnnCache>,
    seq: Option<HgnnCache>,
    gat: Option<GatCache>,
}

fn gat_params(state: &ModelState, l: usize) -> GatParams<'_> {
    GatParams {
        w_dst: state.layer(l, ParamSlot::AttnDstProj),
        w_src: state.layer(l, ParamSlot::AttnSrcProj),
        a_dst: state.layer(l, ParamSlot::AttnDstVec),
        a_src: state.layer(l, ParamSlot::AttnSrcVec),
    }
}

fn check_inputs(graph: &HybridGraph, state: &ModelState, cfg: &HhnConfig) -> Result<()> {
    if state.n_layers() != cfg.n_layers {
        return Err(HhnError::Config(format!(
            "state has {} layers, config {}",
            state.n_layers(),
            cfg.n_layers
        )));
    }
    for (what, got, want) in [
        ("sequence", graph.seq_features.cols(), cfg.seq_dim),
        ("video", graph.video_features.cols(), cfg.video_dim),
    ] {
        if got != want {
            return Err(HhnError::Validation(format!(
                "{what} features have width {got}, model expects {want}"
            )));
        }
    }
    Ok(())
}

fn forward_cached(
    graph: &HybridGraph,
    state: &ModelState,
    cfg: &HhnConfig,
) -> Result<(ForwardOutput, Vec<LayerCache>)> {
    check_inputs(graph, state, cfg)?;
    let act = cfg.activation;
    let mut zs = cfg.uses_sequence().then(|| graph.seq_features.clone());
    let mut zv = cfg.uses_video().then(|| graph.video_features.clone());
    let mut caches = Vec::with_capacity(cfg.n_layers);
    for l in 0..cfg.n_layers {
        let mut cache = LayerCache {
            zs_in: None,
            zv_in: None,
            video: None,
            seq: None,
            gat: None,
        };
        let next_v = match &zv {
            Some(zv_in) => {
                let (out, c) = hgnn_forward(
                    &graph.video_hypergraph.operator,
                    zv_in,
                    state.layer(l, ParamSlot::ThetaVideo),
                    act,
                )?;
                cache.video = Some(c);
                Some(out)
            }
            None => None,
        };
        let next_s = match &zs {
            Some(zs_in) => {
                let messages = match (&zv, cfg.uses_attention()) {
                    (Some(zv_in), true) => {
                        let (m, c) = gat_forward(&graph.seq_neighbors, zs_in, zv_in, gat_params(state, l))?;
                        cache.gat = Some(c);
                        m
                    }
                    _ => DenseMatrix::zeros(zs_in.rows(), cfg.hidden_dim),
                };
                let x = concat_cols(zs_in, &messages)?;
                let (out, c) = hgnn_forward(
                    &graph.seq_hypergraph.operator,
                    &x,
                    state.layer(l, ParamSlot::ThetaSeq),
                    act,
                )?;
                cache.seq = Some(c);
                Some(out)
            }
            None => None,
        };
        cache.zs_in = zs.take();
        cache.zv_in = zv.take();
        zs = next_s;
        zv = next_v;
        caches.push(cache);
    }
    Ok((ForwardOutput { zs, zv }, caches))
}

/// Runs every layer and returns the final per-node embeddings.
pub fn forward_pass(graph: &HybridGraph, state: &ModelState, cfg: &HhnConfig) -> Result<ForwardOutput> {
    forward_cached(graph, state, cfg).map(|(out, _)| out)
}

/// `mean(Z_v) * P_v + mean(Z_s) * P_s` (elementwise), as a `1 x hidden` row.
pub fn readout(zs: &DenseMatrix, zv: &DenseMatrix, p_s: &DenseMatrix, p_v: &DenseMatrix) -> Result<DenseMatrix> {
    readout_opt(Some(zs), Some(zv), p_s, p_v)
}

fn readout_opt(
    zs: Option<&DenseMatrix>,
    zv: Option<&DenseMatrix>,
    p_s: &DenseMatrix,
    p_v: &DenseMatrix,
) -> Result<DenseMatrix> {
    let mut zg = DenseMatrix::zeros(1, p_s.cols());
    if let Some(zs) = zs {
        zg.add_assign(&zs.mean_rows().hadamard(p_s)?)?;
    }
    if let Some(zv) = zv {
        zg.add_assign(&zv.mean_rows().hadamard(p_v)?)?;
    }
    Ok(zg)
}

fn head_logits(zg: &DenseMatrix, w: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    let mut logits = matmul(zg, w)?;
    logits.add_assign(b)?;
    Ok(logits)
}

fn activate_head(logits: &DenseMatrix, head: HeadKind) -> Result<DenseMatrix> {
    match head {
        HeadKind::SinglelabelSoftmax => rowwise_softmax(logits, None),
        HeadKind::MultilabelSigmoid => DenseMatrix::from_vec(
            logits.rows(),
            logits.cols(),
            logits.values().iter().map(|&v| sigmoid(v)).collect(),
        ),
    }
}

/// Class probabilities from a graph embedding.
pub fn classify(zg: &DenseMatrix, w: &DenseMatrix, b: &DenseMatrix, head: HeadKind) -> Result<DenseMatrix> {
    activate_head(&head_logits(zg, w, b)?, head)
}

fn embed(graph: &HybridGraph, state: &ModelState, cfg: &HhnConfig) -> Result<(ForwardOutput, Vec<LayerCache>, DenseMatrix)> {
    let (out, caches) = forward_cached(graph, state, cfg)?;
    let zg = readout_opt(
        out.zs.as_ref(),
        out.zv.as_ref(),
        &state.params[state.p_s_index()].value,
        &state.params[state.p_v_index()].value,
    )?;
    Ok((out, caches, zg))
}

/// Class probabilities for one sample.
pub fn predict(graph: &HybridGraph, state: &ModelState, cfg: &HhnConfig) -> Result<Vec<f64>> {
    let (_, _, zg) = embed(graph, state, cfg)?;
    let probs = classify(
        &zg,
        &state.params[state.head_w_index()].value,
        &state.params[state.head_b_index()].value,
        cfg.head,
    )?;
    Ok(probs.into_values())
}

/// Per-sample loss, probabilities and parameter gradients (aligned with `state.params`).
#[derive(Debug, Clone)]
pub struct SampleGrad {
    pub loss: f64,
    pub probs: Vec<f64>,
    pub grads: Vec<DenseMatrix>,
}

pub fn loss_and_grad(graph: &HybridGraph, state: &ModelState, cfg: &HhnConfig) -> Result<SampleGrad> {
    if graph.labels.len() != cfg.n_classes {
        return Err(HhnError::Validation(format!(
            "sample '{}' has {} labels, model expects {}",
            graph.sample_id,
            graph.labels.len(),
            cfg.n_classes
        )));
    }
    let (out, caches, zg) = embed(graph, state, cfg)?;
    let head_w = &state.params[state.head_w_index()].value;
    let head_b = &state.params[state.head_b_index()].value;
    let probs = activate_head(&head_logits(&zg, head_w, head_b)?, cfg.head)?;
    let labels = DenseMatrix::row_vector(graph.labels.iter().map(|&y| y as f64).collect());
    let loss = focal_loss(&probs, &labels, cfg.head)?;
    let d_logits = focal_loss_grad(&probs, &labels, cfg.head)?;

    let mut grads = state.grad_buffers();
    grads[state.head_w_index()] = matmul_tn(&zg, &d_logits)?;
    grads[state.head_b_index()] = d_logits.clone();
    let d_zg = matmul_nt(&d_logits, head_w)?;

    let stream_grad = |z: &DenseMatrix, p: &DenseMatrix| -> Result<(DenseMatrix, DenseMatrix)> {
        let d_p = z.mean_rows().hadamard(&d_zg)?;
        let d_mean = d_zg.hadamard(p)?;
        let n = z.rows() as f64;
        let mut d_z = DenseMatrix::zeros(z.rows(), z.cols());
        for r in 0..z.rows() {
            for (d, m) in d_z.row_mut(r).iter_mut().zip(d_mean.values()) {
                *d = m / n;
            }
        }
        Ok((d_p, d_z))
    };
    let mut d_zs = match &out.zs {
        Some(zs) => {
            let (d_p, d_z) = stream_grad(zs, &state.params[state.p_s_index()].value)?;
            grads[state.p_s_index()] = d_p;
            Some(d_z)
        }
        None => None,
    };
    let mut d_zv = match &out.zv {
        Some(zv) => {
            let (d_p, d_z) = stream_grad(zv, &state.params[state.p_v_index()].value)?;
            grads[state.p_v_index()] = d_p;
            Some(d_z)
        }
        None => None,
    };

    let act = cfg.activation;
    for (l, cache) in caches.iter().enumerate().rev() {
        let need_inputs = l > 0;
        let mut d_zs_in: Option<DenseMatrix> = None;
        let mut d_zv_in: Option<DenseMatrix> = None;

        if let (Some(c), Some(d_out)) = (&cache.seq, &d_zs) {
            let theta = state.layer(l, ParamSlot::ThetaSeq);
            let want_x = need_inputs || cache.gat.is_some();
            let (d_theta, d_x) = hgnn_backward(&graph.seq_hypergraph.operator, theta, c, d_out, act, want_x)?;
            grads[ModelState::layer_index(l, ParamSlot::ThetaSeq)] = d_theta;
            if let Some(d_x) = d_x {
                let zs_in = cache.zs_in.as_ref().expect("sequence input cached");
                let width = zs_in.cols();
                if need_inputs {
                    d_zs_in = Some(d_x.col_slice(0, width));
                }
                if let Some(gc) = &cache.gat {
                    let d_msg = d_x.col_slice(width, d_x.cols());
                    let zv_in = cache.zv_in.as_ref().expect("video input cached");
                    let g = gat_backward(zs_in, zv_in, gat_params(state, l), gc, &d_msg, need_inputs)?;
                    grads[ModelState::layer_index(l, ParamSlot::AttnDstProj)] = g.w_dst;
                    grads[ModelState::layer_index(l, ParamSlot::AttnSrcProj)] = g.w_src;
                    grads[ModelState::layer_index(l, ParamSlot::AttnDstVec)] = g.a_dst;
                    grads[ModelState::layer_index(l, ParamSlot::AttnSrcVec)] = g.a_src;
                    if let (Some(dz), Some(acc)) = (g.z_dst, d_zs_in.as_mut()) {
                        acc.add_assign(&dz)?;
                    }
                    d_zv_in = g.z_src;
                }
            }
        }

        if let (Some(c), Some(d_out)) = (&cache.video, &d_zv) {
            let theta = state.layer(l, ParamSlot::ThetaVideo);
            let (d_theta, d_x) =
                hgnn_backward(&graph.video_hypergraph.operator, theta, c, d_out, act, need_inputs)?;
            grads[ModelState::layer_index(l, ParamSlot::ThetaVideo)] = d_theta;
            if let Some(d_x) = d_x {
                match d_zv_in.as_mut() {
                    Some(acc) => acc.add_assign(&d_x)?,
                    None => d_zv_in = Some(d_x),
                }
            }
        }
        d_zs = d_zs_in;
        d_zv = d_zv_in;
    }

    Ok(SampleGrad {
        loss,
        probs: probs.into_values(),
        grads,
    })
}
