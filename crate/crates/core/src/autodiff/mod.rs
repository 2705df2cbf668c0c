//! Dense tensors and tape-based reverse-mode differentiation.
//!
//! A [`Tape`] records every operation of one forward pass over borrowed
//! parameters. [`Tape::backward`] replays the record in reverse, so fan-out
//! and fan-in in the computation graph (as in conversation DAGs) need no
//! special handling: gradients from several consumers simply accumulate.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::{grad_check, grad_check_params, relative_error, GradCheckReport};
pub use tape::{softmax, ElementwiseDerivative, ParamGrads, Precision, Tape, Var};
pub use tensor::{ParamId, ParamSet, Tensor};
