//! Dense `f64` matrices and the handful of differentiable primitives the
//! model needs. Backward rules live next to the layers that use them.

mod gradcheck;
mod matrix;
mod ops;
mod param;

pub use gradcheck::{finite_diff_grad_check, relative_error, GradCheckReport, GradEntry, REL_ERROR_FLOOR};
pub use matrix::{matmul, matmul_nt, matmul_tn, DenseMatrix};
pub use ops::{apply_activation, concat_cols, rowwise_softmax, sigmoid, Activation, Mask, LEAKY_RELU_SLOPE};
pub use param::ParamTensor;
