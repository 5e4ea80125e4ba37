//! Minimal dense numeric core: tensors, a reverse-mode tape over a fixed
//! operation set, Adam with max-norm regularization, dropout, losses, and
//! evaluation metrics.

pub mod gradcheck;
pub mod metrics;
pub mod optim;
pub mod scalar;
pub mod tape;

pub use optim::{AdamConfig, ParamKind, ParamStore};
pub use scalar::Scalar;
pub use tape::{dropout, dropout_mask, NnError, Tape, Var};

/// Dense row-major matrix; the only tensor shape the models need.
pub type Tensor2<S> = ndarray::Array2<S>;
