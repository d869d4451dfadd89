//! Large selective kernel attention block, forward pass only.
//!
//! The block runs two depthwise branches (a 5x5 and a 7x7 with dilation 3
//! stacked on it), reduces each with a ghost convolution, derives two
//! spatial attention maps from channel mean/max pooling, reweights the two
//! branches with them, fuses back to the input width with a pointwise conv and
//! gates the input element-wise.
//!
//! Two convolution implementations are provided: [`conv2d_direct`] is the
//! plain loop used as an oracle, [`conv2d_fast`] the im2col path used by
//! default.

mod block;
mod conv;
mod ghost;
pub mod io;
mod tensor;

pub use block::{channel_pool, lsk_forward, lsk_forward_traced, sigmoid, LskParams, LskTrace};
pub use conv::{conv2d_direct, conv2d_fast, ConvPath, ConvSpec};
pub use ghost::{ghost_conv, ghost_conv_with, GhostSpec};
pub use tensor::Tensor4;
