//! A small differentiable-network engine: dense, 1-D convolution,
//! pointwise and dropout layers, back-propagation, Adam and a binary
//! checkpoint format.

pub mod adam;
pub mod checkpoint;
pub mod layers;
pub mod network;

pub use adam::{adam_step, AdamState};
pub use checkpoint::{Checkpoint, Section};
pub use layers::{dropout_apply, softmax, xavier_init, Activation, Conv1d, Dense, Dropout, Layer, Mode, Pointwise};
pub use network::{backward_pass, ForwardCache, Gradients, Network};
