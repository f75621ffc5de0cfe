use crate::error::{HhnError, Result};
use crate::kernel::{matmul, matmul_nt, matmul_tn, Activation, DenseMatrix};

#[derive(Debug, Clone)]
pub struct HgnnCache {
    pub input: DenseMatrix,
    pub pre: DenseMatrix,
}

/// `act(op * z * theta)`, evaluated as `op * (z * theta)`.
pub fn hgnn_forward(
    op: &DenseMatrix,
    z: &DenseMatrix,
    theta: &DenseMatrix,
    act: Activation,
) -> Result<(DenseMatrix, HgnnCache)> {
    let pre = matmul(op, &matmul(z, theta)?)?;
    let mut out = pre.clone();
    out.values_mut().iter_mut().for_each(|v| *v = act.eval(*v));
    Ok((
        out,
        HgnnCache {
            input: z.clone(),
            pre,
        },
    ))
}

/// Hypergraph convolution with ELU.
pub fn hgnn_layer(op: &DenseMatrix, z: &DenseMatrix, theta: &DenseMatrix) -> Result<DenseMatrix> {
    hgnn_forward(op, z, theta, Activation::Elu).map(|(out, _)| out)
}

/// Returns `(d_theta, d_input)`; `d_input` only when requested.
pub fn hgnn_backward(
    op: &DenseMatrix,
    theta: &DenseMatrix,
    cache: &HgnnCache,
    d_out: &DenseMatrix,
    act: Activation,
    want_input_grad: bool,
) -> Result<(DenseMatrix, Option<DenseMatrix>)> {
    let mut d_pre = d_out.clone();
    for (d, &x) in d_pre.values_mut().iter_mut().zip(cache.pre.values()) {
        *d *= act.derivative(x);
    }
    let g = matmul_tn(op, &d_pre)?;
    let d_theta = matmul_tn(&cache.input, &g)?;
    let d_input = if want_input_grad {
        Some(matmul_nt(&g, theta)?)
    } else {
        None
    };
    Ok((d_theta, d_input))
}

/// Bipartite attention parameters: destination nodes are sequence segments,
/// sources are video segments.
#[derive(Debug, Clone, Copy)]
pub struct GatParams<'a> {
    pub w_dst: &'a DenseMatrix,
    pub w_src: &'a DenseMatrix,
    pub a_dst: &'a DenseMatrix,
    pub a_src: &'a DenseMatrix,
}

#[derive(Debug, Clone)]
pub struct GatCache {
    pub q: DenseMatrix,
    pub k: DenseMatrix,
    /// Per destination: `(source, alpha, raw score before leaky ReLU)`.
    pub attention: Vec<Vec<(usize, f64, f64)>>,
}

#[derive(Debug, Clone)]
pub struct GatGrads {
    pub w_dst: DenseMatrix,
    pub w_src: DenseMatrix,
    pub a_dst: DenseMatrix,
    pub a_src: DenseMatrix,
    pub z_dst: Option<DenseMatrix>,
    pub z_src: Option<DenseMatrix>,
}

/// Messages for every destination node.
///
/// `e_ij = leaky_relu(a_dst . W_dst z_i + a_src . W_src z_j)`,
/// `alpha_ij = softmax_j(e_ij + ln w_ij)` over the neighbours of `i`,
/// `out_i = sum_j alpha_ij W_src z_j`. Nodes without neighbours get zeros.
pub fn gat_forward(
    neighbors: &[Vec<(usize, f64)>],
    z_dst: &DenseMatrix,
    z_src: &DenseMatrix,
    p: GatParams<'_>,
) -> Result<(DenseMatrix, GatCache)> {
    if neighbors.len() != z_dst.rows() {
        return Err(HhnError::Dimension {
            op: "gat_forward",
            lhs: (neighbors.len(), 0),
            rhs: z_dst.shape(),
        });
    }
    let q = matmul(z_dst, p.w_dst)?;
    let k = matmul(z_src, p.w_src)?;
    let sq = matmul(&q, p.a_dst)?;
    let sk = matmul(&k, p.a_src)?;
    let lrelu = Activation::leaky_relu();
    let mut out = DenseMatrix::zeros(z_dst.rows(), k.cols());
    let mut attention = Vec::with_capacity(neighbors.len());
    for (i, nb) in neighbors.iter().enumerate() {
        if nb.is_empty() {
            attention.push(Vec::new());
            continue;
        }
        let scored: Vec<(usize, f64, f64)> = nb
            .iter()
            .map(|&(j, log_w)| {
                if j >= k.rows() {
                    return Err(HhnError::Validation(format!(
                        "attention neighbour {j} out of range {}",
                        k.rows()
                    )));
                }
                let raw = sq.get(i, 0) + sk.get(j, 0);
                Ok((j, lrelu.eval(raw) + log_w, raw))
            })
            .collect::<Result<_>>()?;
        let max = scored.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = scored.iter().map(|s| (s.1 - max).exp()).sum();
        let row: Vec<(usize, f64, f64)> = scored
            .into_iter()
            .map(|(j, logit, raw)| (j, (logit - max).exp() / total, raw))
            .collect();
        let out_row = out.row_mut(i);
        for &(j, alpha, _) in &row {
            for (o, kv) in out_row.iter_mut().zip(k.row(j)) {
                *o += alpha * kv;
            }
        }
        attention.push(row);
    }
    Ok((out, GatCache { q, k, attention }))
}

pub fn gat_layer(
    neighbors: &[Vec<(usize, f64)>],
    z_dst: &DenseMatrix,
    z_src: &DenseMatrix,
    p: GatParams<'_>,
) -> Result<DenseMatrix> {
    gat_forward(neighbors, z_dst, z_src, p).map(|(m, _)| m)
}

pub fn gat_backward(
    z_dst: &DenseMatrix,
    z_src: &DenseMatrix,
    p: GatParams<'_>,
    cache: &GatCache,
    d_out: &DenseMatrix,
    want_input_grads: bool,
) -> Result<GatGrads> {
    let g = cache.k.cols();
    let lrelu = Activation::leaky_relu();
    let a_dst = p.a_dst.values();
    let a_src = p.a_src.values();
    let mut d_q = DenseMatrix::zeros(cache.q.rows(), g);
    let mut d_k = DenseMatrix::zeros(cache.k.rows(), g);
    let mut d_sq = vec![0.0; cache.q.rows()];
    let mut d_sk = vec![0.0; cache.k.rows()];
    for (i, row) in cache.attention.iter().enumerate() {
        if row.is_empty() {
            continue;
        }
        let d_msg = d_out.row(i);
        let d_alpha: Vec<f64> = row
            .iter()
            .map(|&(j, _, _)| d_msg.iter().zip(cache.k.row(j)).map(|(a, b)| a * b).sum())
            .collect();
        let weighted: f64 = row.iter().zip(&d_alpha).map(|(r, da)| r.1 * da).sum();
        for (&(j, alpha, raw), da) in row.iter().zip(&d_alpha) {
            for (dk, dm) in d_k.row_mut(j).iter_mut().zip(d_msg) {
                *dk += alpha * dm;
            }
            let d_raw = alpha * (da - weighted) * lrelu.derivative(raw);
            d_sq[i] += d_raw;
            d_sk[j] += d_raw;
        }
    }
    for (i, &ds) in d_sq.iter().enumerate() {
        if ds != 0.0 {
            for (dq, a) in d_q.row_mut(i).iter_mut().zip(a_dst) {
                *dq += ds * a;
            }
        }
    }
    for (j, &ds) in d_sk.iter().enumerate() {
        if ds != 0.0 {
            for (dk, a) in d_k.row_mut(j).iter_mut().zip(a_src) {
                *dk += ds * a;
            }
        }
    }
    let d_a_dst = matmul_tn(&cache.q, &DenseMatrix::column_vector(d_sq))?;
    let d_a_src = matmul_tn(&cache.k, &DenseMatrix::column_vector(d_sk))?;
    let d_w_dst = matmul_tn(z_dst, &d_q)?;
    let d_w_src = matmul_tn(z_src, &d_k)?;
    let (z_dst_grad, z_src_grad) = if want_input_grads {
        (Some(matmul_nt(&d_q, p.w_dst)?), Some(matmul_nt(&d_k, p.w_src)?))
    } else {
        (None, None)
    };
    Ok(GatGrads {
        w_dst: d_w_dst,
        w_src: d_w_src,
        a_dst: d_a_dst,
        a_src: d_a_src,
        z_dst: z_dst_grad,
        z_src: z_src_grad,
    })
}
