use super::DenseMatrix;

/// A learnable matrix together with its gradient and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    pub name: String,
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
    pub moment1: DenseMatrix,
    pub moment2: DenseMatrix,
}

impl ParamTensor {
    pub fn new(name: impl Into<String>, value: DenseMatrix) -> Self {
        let (r, c) = value.shape();
        Self {
            name: name.into(),
            value,
            grad: DenseMatrix::zeros(r, c),
            moment1: DenseMatrix::zeros(r, c),
            moment2: DenseMatrix::zeros(r, c),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.shape()
    }

    pub fn len(&self) -> usize {
        self.value.values().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }
}
