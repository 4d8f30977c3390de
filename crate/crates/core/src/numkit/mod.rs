//! Dense `f64` kernel with a reverse-mode tape, finite-difference checking
//! and AdaGrad.

mod gradcheck;
mod params;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, relative_error, GradCheckOptions, GradCheckReport, TensorCheck};
pub use params::{accumulate_grads, scale_grads, Adagrad, Grads, ParamStore};
pub use tape::{Tape, Var, COSINE_EPS};
pub use tensor::{affine, matvec, matvec_t, softmax, Tensor};
