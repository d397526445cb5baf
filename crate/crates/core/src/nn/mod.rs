//! Scalar-generic numeric core: a reverse-mode tape over 2-D arrays and
//! the Adam optimizer. Everything here is parameterized over [`Scalar`]
//! so the same code runs at `f32` for training and `f64` for gradient
//! verification.

mod adam;
mod scalar;
mod tape;

pub use adam::{clip_global_norm, Adam};
pub use scalar::Scalar;
pub use tape::{Gradients, NodeId, Tape};

pub(crate) use tape::argmax_rows;
