//! Dense tensors, reverse-mode differentiation, and the Adam optimizer.

mod adam;
mod tensor;
mod tape;

pub use adam::{adam_step, adam_step_refs, AdamState};
pub use tape::{Graph, Var};
pub use tensor::Tensor;
