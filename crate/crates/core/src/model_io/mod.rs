//! Manifests, tensor files, datasets, model quantization and Norm scale
//! calibration.
//!
//! A manifest is a JSON document naming the layers in order plus one
//! little-endian binary32 file per weight or bias tensor. Conv kernels are
//! stored height, width, input channel, output channel; FC matrices are `out`
//! rows of `in` values, with FC inputs flattened from HWC (channel fastest).

mod dataset;
mod manifest;
mod quantize;
mod scales;

use std::path::PathBuf;

use thiserror::Error;

use crate::engine::EngineError;
use crate::fxcore::FxError;

pub use dataset::{load_cifar10, load_cifar_binary, load_idx, load_mnist, Dataset, Split, CIFAR_SHAPE, MNIST_SHAPE};
pub use manifest::{load_manifest, save_manifest, ConvSpec, FcSpec, LayerSpec, LayerTensors, ModelLayer, ModelManifest};
pub use quantize::{preprocess, preprocess_real, quantize_model, FixedInference, FixedModel, RealModel};
pub use scales::{
    calibrate_norm_scales, plan_from_profile, profile_activations, scale_exponent, ActivationProfile, LayerScale,
    ScalePlan, CALIBRATION_IMAGES,
};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("layer {layer}: tensor file {path} not found")]
    MissingFile { layer: usize, path: PathBuf },
    #[error("layer {layer}: {path} has {found} bytes, expected {expected}")]
    SizeMismatch { layer: usize, path: PathBuf, expected: usize, found: usize },
    #[error("layer {layer}: tensor has {found} elements, expected {expected}")]
    TensorLength { layer: usize, expected: usize, found: usize },
    #[error("layer {layer}: weights_file and bias_file are required")]
    MissingTensorName { layer: usize },
    #[error("layer {layer}: {kind} layers take no tensors")]
    UnexpectedTensors { layer: usize, kind: &'static str },
    #[error("layer {layer}: {reason}")]
    LayerShape { layer: usize, reason: String },
    #[error("{path}: bad magic {found:08x?}, expected {expected:#010x}")]
    BadMagic { path: PathBuf, expected: u32, found: Option<u32> },
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("{path}: truncated record at byte {offset}")]
    TruncatedRecord { path: PathBuf, offset: usize },
    #[error("item {index}: label {label} is not a class index")]
    InvalidLabel { index: usize, label: u8 },
    #[error("layer {layer}: all weights are zero, no scale exists")]
    ZeroTensor { layer: usize },
    #[error("calibration needs at least one sample image")]
    EmptySample,
    #[error("the calibrated Norm policy needs a scale plan")]
    MissingPlan,
    #[error("scale plan mismatch: {0}")]
    PlanMismatch(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Fx(#[from] FxError),
}
