//! Layers, MAC datapaths and network evaluation in real or fixed-point
//! arithmetic.
//!
//! A network is generic over a [`Datapath`]: [`RealMac`] for the binary64
//! reference and [`FixedMac`] for bit-exact fixed point on raw words. Both
//! share the layer loops, so both visit MAC terms in the same order: kernel
//! row, kernel column, then input channel, with the bias added last.

mod config;
mod layers;
mod mac;
mod network;
mod tensor;

use thiserror::Error;

use crate::fxcore::FxError;

pub use config::{Arithmetic, FxConfig, MacPosition, NormShiftPolicy, DEFAULT_NORM_OVERFLOW_BITS};
pub use layers::{conv2d, conv2d_direct, fc, maxpool, relu, ConvLayer, ConvParams, FcLayer, FcParams, Padding, PoolParams};
pub use mac::{mac_rmac, mac_rmult, Datapath, ExecContext, FixedMac, RealMac};
pub use network::{argmax, Inference, Layer, Network};
pub use tensor::{FxTensor, Tensor};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("expected {expected} elements, found {found}")]
    ElementCount { expected: usize, found: usize },
    #[error("{0}")]
    Shape(String),
    #[error("layer {index} ({kind}): {reason}")]
    LayerShape { index: usize, kind: &'static str, reason: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
    #[error(transparent)]
    Fx(#[from] FxError),
}
