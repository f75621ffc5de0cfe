use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DenseMatrix;
use crate::error::{HhnError, Result};

/// Slope used for every leaky ReLU in the attention layers.
pub const LEAKY_RELU_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    LeakyRelu { slope: f64 },
    Sigmoid,
    Elu,
    Identity,
}

impl Activation {
    pub fn leaky_relu() -> Self {
        Activation::LeakyRelu {
            slope: LEAKY_RELU_SLOPE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::LeakyRelu { slope } if !(slope > 0.0 && slope < 1.0) => Err(
                HhnError::Config(format!("leaky_relu slope {slope} outside (0, 1)")),
            ),
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    x
                } else {
                    slope * x
                }
            }
            Activation::Sigmoid => sigmoid(x),
            Activation::Elu => {
                if x > 0.0 {
                    x
                } else {
                    x.exp_m1()
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative with respect to the pre-activation `x`.
    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Activation::LeakyRelu { slope } => {
                if x >= 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Elu => {
                if x > 0.0 {
                    1.0
                } else {
                    x.exp()
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl FromStr for Activation {
    type Err = HhnError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "leaky_relu" | "leaky-relu" => Ok(Activation::leaky_relu()),
            "sigmoid" => Ok(Activation::Sigmoid),
            "elu" => Ok(Activation::Elu),
            "identity" => Ok(Activation::Identity),
            other => Err(HhnError::Config(format!("unknown activation '{other}'"))),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn apply_activation(m: &DenseMatrix, kind: Activation) -> Result<DenseMatrix> {
    kind.validate()?;
    if kind == Activation::Identity {
        return Ok(m.clone());
    }
    let mut out = m.clone();
    out.values_mut().iter_mut().for_each(|v| *v = kind.eval(*v));
    Ok(out)
}

/// Row-major boolean mask; `true` marks an entry that participates.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn new(rows: usize, cols: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != rows * cols {
            return Err(HhnError::Dimension {
                op: "mask",
                lhs: (rows, cols),
                rhs: (bits.len(), 1),
            });
        }
        Ok(Self { rows, cols, bits })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        self.bits[r * self.cols + c]
    }

    pub fn row_has_any(&self, r: usize) -> bool {
        self.bits[r * self.cols..(r + 1) * self.cols].iter().any(|&b| b)
    }
}

/// Softmax along each row, restricted to unmasked entries. Masked entries become 0.
pub fn rowwise_softmax(m: &DenseMatrix, mask: Option<&Mask>) -> Result<DenseMatrix> {
    if let Some(mask) = mask {
        if mask.shape() != m.shape() {
            return Err(HhnError::Dimension {
                op: "rowwise_softmax",
                lhs: m.shape(),
                rhs: mask.shape(),
            });
        }
    }
    let keep = |r: usize, c: usize| mask.map_or(true, |k| k.get(r, c));
    let mut out = DenseMatrix::zeros(m.rows(), m.cols());
    for r in 0..m.rows() {
        let row = m.row(r);
        let max = row
            .iter()
            .enumerate()
            .filter(|(c, _)| keep(r, *c))
            .map(|(_, v)| *v)
            .fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            if m.cols() == 0 {
                continue;
            }
            return Err(HhnError::DegenerateRow { row: r });
        }
        let out_row = out.row_mut(r);
        let mut total = 0.0;
        for (c, (o, v)) in out_row.iter_mut().zip(row).enumerate() {
            if keep(r, c) {
                *o = (v - max).exp();
                total += *o;
            }
        }
        out_row.iter_mut().for_each(|o| *o /= total);
    }
    Ok(out)
}

/// `[a | b]`: columns of `a` followed by columns of `b`.
pub fn concat_cols(a: &DenseMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.rows() != b.rows() {
        return Err(HhnError::Dimension {
            op: "concat_cols",
            lhs: a.shape(),
            rhs: b.shape(),
        });
    }
    let cols = a.cols() + b.cols();
    let mut values = Vec::with_capacity(a.rows() * cols);
    for r in 0..a.rows() {
        values.extend_from_slice(a.row(r));
        values.extend_from_slice(b.row(r));
    }
    DenseMatrix::from_vec(a.rows(), cols, values)
}
