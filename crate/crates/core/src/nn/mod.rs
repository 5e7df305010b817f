//! Minimal reverse-mode automatic differentiation over `f64` matrices.
//!
//! Everything trainable in this crate (the transformer encoder, the softmax
//! heads, the recurrent baseline) is expressed as a graph of [`Tape`] ops so
//! that one backward pass yields exact analytic gradients. Values are plain
//! `ndarray` matrices; scalars are `1x1`. The op set is deliberately small:
//! just what the models here need, each with a hand-derived backward rule
//! that is validated against central finite differences in the test suite.

mod gradcheck;
mod params;
mod tape;

pub use gradcheck::{central_difference, relative_error, sample_coordinates};
pub use params::{clip_global_norm, Adam, AdamParams, ParamId, ParamStore};
pub use tape::{dropout_mask, NodeId, Tape};
