use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ModelError, ScalePlan};
use crate::engine::{ConvLayer, ConvParams, Datapath, FcLayer, FcParams, Layer, Network, Padding, PoolParams};

/// Convolution parameters as written in a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    /// Kernel height, width, input channels, output channels.
    pub kernel: [usize; 4],
    #[serde(default = "one")]
    pub stride: usize,
    pub padding: Padding,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcSpec {
    #[serde(rename = "in")]
    pub inputs: usize,
    #[serde(rename = "out")]
    pub outputs: usize,
}

/// One layer of a manifest, without its tensors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "lowercase")]
pub enum LayerSpec {
    Conv(ConvSpec),
    Fc(FcSpec),
    #[serde(rename = "maxpool")]
    MaxPool(PoolParams),
    Relu,
    Flatten,
}

impl LayerSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv(_) => "conv",
            LayerSpec::Fc(_) => "fc",
            LayerSpec::MaxPool(_) => "maxpool",
            LayerSpec::Relu => "relu",
            LayerSpec::Flatten => "flatten",
        }
    }

    /// Element counts of the weight and bias tensors, if the layer has any.
    pub fn tensor_sizes(&self) -> Option<(usize, usize)> {
        match self {
            LayerSpec::Conv(c) => Some((c.kernel.iter().product(), c.kernel[3])),
            LayerSpec::Fc(f) => Some((f.inputs * f.outputs, f.outputs)),
            _ => None,
        }
    }

    pub fn conv_params(c: &ConvSpec) -> ConvParams {
        ConvParams {
            kernel_h: c.kernel[0],
            kernel_w: c.kernel[1],
            in_channels: c.kernel[2],
            out_channels: c.kernel[3],
            stride: c.stride,
            padding: c.padding,
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match self {
            LayerSpec::Conv(c) => Self::conv_params(c).geometry(input).map(|(s, _, _)| s.to_vec()),
            LayerSpec::Fc(f) => {
                if input != [f.inputs] {
                    return Err(format!("fc expects [{}], got {input:?}", f.inputs));
                }
                Ok(vec![f.outputs])
            }
            LayerSpec::MaxPool(p) => p.output_shape(input).map(|s| s.to_vec()),
            LayerSpec::Relu => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LayerEntry {
    #[serde(flatten)]
    spec: LayerSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias_file: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestFile {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<LayerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    scales: Option<ScalePlan>,
}

/// Weight and bias tensors of one layer, as stored (binary32).
#[derive(Debug, Clone, PartialEq)]
pub struct LayerTensors {
    pub weights_file: String,
    pub bias_file: String,
    /// Conv kernels in HWIO order; FC matrices as `out` rows of `in` values.
    pub weights: Vec<f32>,
    pub bias: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelLayer {
    pub spec: LayerSpec,
    pub tensors: Option<LayerTensors>,
}

/// A validated model: architecture, loaded tensors and optional scale plan.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelManifest {
    pub name: String,
    pub input_shape: Vec<usize>,
    pub layers: Vec<ModelLayer>,
    pub scales: Option<ScalePlan>,
}

impl ModelManifest {
    /// Build and validate a model from in-memory parts.
    pub fn new(
        name: impl Into<String>,
        input_shape: Vec<usize>,
        layers: Vec<ModelLayer>,
        scales: Option<ScalePlan>,
    ) -> Result<Self, ModelError> {
        let m = Self { name: name.into(), input_shape, layers, scales };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<(), ModelError> {
        let mut shape = self.input_shape.clone();
        for (layer, l) in self.layers.iter().enumerate() {
            match (l.spec.tensor_sizes(), &l.tensors) {
                (Some((w, b)), Some(t)) => {
                    if t.weights.len() != w {
                        return Err(ModelError::TensorLength { layer, expected: w, found: t.weights.len() });
                    }
                    if t.bias.len() != b {
                        return Err(ModelError::TensorLength { layer, expected: b, found: t.bias.len() });
                    }
                }
                (Some(_), None) => return Err(ModelError::MissingTensorName { layer }),
                (None, Some(_)) => {
                    return Err(ModelError::UnexpectedTensors { layer, kind: l.spec.kind() });
                }
                (None, None) => {}
            }
            shape = l.spec.output_shape(&shape).map_err(|reason| ModelError::LayerShape { layer, reason })?;
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(|l| l.tensors.as_ref())
            .map(|t| t.weights.len() + t.bias.len())
            .sum()
    }

    pub fn output_shape(&self) -> Vec<usize> {
        self.layers
            .iter()
            .fold(self.input_shape.clone(), |s, l| l.spec.output_shape(&s).expect("validated"))
    }

    /// Indices of the layers that carry weights.
    pub fn weighted_layers(&self) -> Vec<usize> {
        self.layers.iter().enumerate().filter(|(_, l)| l.tensors.is_some()).map(|(i, _)| i).collect()
    }

    /// Bind every layer to a datapath. `make` receives the layer index and its
    /// tensors and returns the datapath plus converted weights and biases.
    pub fn build_network<D, F>(&self, mut make: F) -> Result<Network<D>, ModelError>
    where
        D: Datapath,
        F: FnMut(usize, &LayerTensors) -> Result<(D, Vec<D::Elem>, Vec<D::Bias>), ModelError>,
    {
        let mut layers = Vec::with_capacity(self.layers.len());
        for (i, l) in self.layers.iter().enumerate() {
            let layer = match (&l.spec, &l.tensors) {
                (LayerSpec::Conv(c), Some(t)) => {
                    let (unit, w, b) = make(i, t)?;
                    Layer::Conv(ConvLayer::from_hwio(LayerSpec::conv_params(c), &w, b, unit)?)
                }
                (LayerSpec::Fc(f), Some(t)) => {
                    let (unit, w, b) = make(i, t)?;
                    Layer::Fc(FcLayer::new(FcParams { inputs: f.inputs, outputs: f.outputs }, w, b, unit)?)
                }
                (LayerSpec::MaxPool(p), _) => Layer::MaxPool(*p),
                (LayerSpec::Relu, _) => Layer::Relu,
                (LayerSpec::Flatten, _) => Layer::Flatten,
                _ => return Err(ModelError::MissingTensorName { layer: i }),
            };
            layers.push(layer);
        }
        Ok(Network::new(self.input_shape.clone(), layers)?)
    }
}

fn read_tensor(dir: &Path, name: &str, layer: usize, expected: usize) -> Result<Vec<f32>, ModelError> {
    let path = dir.join(name);
    let bytes = fs::read(&path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ModelError::MissingFile { layer, path: path.clone() }
        } else {
            ModelError::Io { path: path.clone(), source }
        }
    })?;
    if bytes.len() != expected * 4 {
        return Err(ModelError::SizeMismatch { layer, path, expected: expected * 4, found: bytes.len() });
    }
    Ok(bytes.chunks_exact(4).map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]])).collect())
}

/// Read a JSON manifest and every tensor it references (paths relative to
/// the manifest's directory), then validate it.
pub fn load_manifest(path: impl AsRef<Path>) -> Result<ModelManifest, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io { path: path.to_path_buf(), source })?;
    let file: ManifestFile =
        serde_json::from_str(&text).map_err(|source| ModelError::Json { path: path.to_path_buf(), source })?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut layers = Vec::with_capacity(file.layers.len());
    for (layer, e) in file.layers.into_iter().enumerate() {
        let tensors = match e.spec.tensor_sizes() {
            Some((w, b)) => {
                let (Some(wf), Some(bf)) = (e.weights_file, e.bias_file) else {
                    return Err(ModelError::MissingTensorName { layer });
                };
                let weights = read_tensor(dir, &wf, layer, w)?;
                let bias = read_tensor(dir, &bf, layer, b)?;
                Some(LayerTensors { weights_file: wf, bias_file: bf, weights, bias })
            }
            None => {
                if e.weights_file.is_some() || e.bias_file.is_some() {
                    return Err(ModelError::UnexpectedTensors { layer, kind: e.spec.kind() });
                }
                None
            }
        };
        layers.push(ModelLayer { spec: e.spec, tensors });
    }
    ModelManifest::new(file.name, file.input_shape, layers, file.scales)
}

/// Write `model` as `manifest.json` plus its tensor files into `dir`.
/// Returns the manifest path.
pub fn save_manifest(model: &ModelManifest, dir: impl AsRef<Path>) -> Result<PathBuf, ModelError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| ModelError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut entries = Vec::with_capacity(model.layers.len());
    for l in &model.layers {
        if let Some(t) = &l.tensors {
            for (name, data) in [(&t.weights_file, &t.weights), (&t.bias_file, &t.bias)] {
                let bytes: Vec<u8> = data.iter().flat_map(|v| v.to_le_bytes()).collect();
                let p = dir.join(name);
                fs::write(&p, bytes).map_err(io(&p))?;
            }
        }
        entries.push(LayerEntry {
            spec: l.spec,
            weights_file: l.tensors.as_ref().map(|t| t.weights_file.clone()),
            bias_file: l.tensors.as_ref().map(|t| t.bias_file.clone()),
        });
    }
    let file = ManifestFile {
        name: model.name.clone(),
        input_shape: model.input_shape.clone(),
        layers: entries,
        scales: model.scales.clone(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&file).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(io(&path))?;
    Ok(path)
}
