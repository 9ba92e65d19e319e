use serde::{Deserialize, Serialize};

use super::mac::{Datapath, ExecContext};
use super::tensor::Tensor;
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// No padding; the window must fit entirely inside the input.
    Valid,
    /// Zero padding so the output has `ceil(input / stride)` positions; any odd
    /// padding goes to the bottom and right.
    Same,
}

/// Geometry of a 2-D convolution. Kernels are stored height, width, input
/// channel, output channel (HWIO).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvParams {
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    #[serde(default = "one")]
    pub stride: usize,
    pub padding: Padding,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolParams {
    pub window: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FcParams {
    pub inputs: usize,
    pub outputs: usize,
}

fn axis(input: usize, k: usize, stride: usize, padding: Padding) -> Option<(usize, usize)> {
    if stride == 0 || k == 0 {
        return None;
    }
    match padding {
        Padding::Valid => (input >= k).then(|| ((input - k) / stride + 1, 0)),
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + k).saturating_sub(input);
            Some((out, total / 2))
        }
    }
}

impl ConvParams {
    pub fn weight_count(&self) -> usize {
        self.kernel_h * self.kernel_w * self.in_channels * self.out_channels
    }

    /// Output shape and (top, left) padding for an HWC input shape.
    pub fn geometry(&self, input: &[usize]) -> Result<([usize; 3], usize, usize), String> {
        let [h, w, c] = match input {
            [h, w, c] => [*h, *w, *c],
            _ => return Err(format!("conv expects an HWC input, got {input:?}")),
        };
        if c != self.in_channels {
            return Err(format!("conv expects {} input channels, got {c}", self.in_channels));
        }
        let (oh, pt) = axis(h, self.kernel_h, self.stride, self.padding)
            .ok_or_else(|| format!("kernel height {} does not fit input height {h}", self.kernel_h))?;
        let (ow, pl) = axis(w, self.kernel_w, self.stride, self.padding)
            .ok_or_else(|| format!("kernel width {} does not fit input width {w}", self.kernel_w))?;
        Ok(([oh, ow, self.out_channels], pt, pl))
    }
}

impl PoolParams {
    pub fn output_shape(&self, input: &[usize]) -> Result<[usize; 3], String> {
        let [h, w, c] = match input {
            [h, w, c] => [*h, *w, *c],
            _ => return Err(format!("maxpool expects an HWC input, got {input:?}")),
        };
        let (oh, _) = axis(h, self.window, self.stride, Padding::Valid)
            .ok_or_else(|| format!("pool window {} does not fit {h}x{w}", self.window))?;
        let (ow, _) = axis(w, self.window, self.stride, Padding::Valid)
            .ok_or_else(|| format!("pool window {} does not fit {h}x{w}", self.window))?;
        Ok([oh, ow, c])
    }
}

/// A convolution bound to its weights and datapath.
#[derive(Debug, Clone)]
pub struct ConvLayer<D: Datapath> {
    pub params: ConvParams,
    /// One contiguous row per output channel, in MAC order (row, column,
    /// input channel).
    rows: Vec<D::Elem>,
    bias: Vec<D::Bias>,
    pub unit: D,
}

impl<D: Datapath> ConvLayer<D> {
    /// Bind HWIO kernel weights and one bias per output channel.
    pub fn from_hwio(params: ConvParams, hwio: &[D::Elem], bias: Vec<D::Bias>, unit: D) -> Result<Self, EngineError> {
        if hwio.len() != params.weight_count() {
            return Err(EngineError::ElementCount { expected: params.weight_count(), found: hwio.len() });
        }
        if bias.len() != params.out_channels {
            return Err(EngineError::ElementCount { expected: params.out_channels, found: bias.len() });
        }
        let co_n = params.out_channels;
        let patch = params.kernel_h * params.kernel_w * params.in_channels;
        let mut rows = vec![D::Elem::default(); hwio.len()];
        for (tap, chunk) in hwio.chunks_exact(co_n).enumerate() {
            for (co, &v) in chunk.iter().enumerate() {
                rows[co * patch + tap] = v;
            }
        }
        Ok(Self { params, rows, bias, unit })
    }

    fn row(&self, co: usize) -> &[D::Elem] {
        let patch = self.rows.len() / self.params.out_channels;
        &self.rows[co * patch..(co + 1) * patch]
    }
}

/// A fully connected layer. Weights are `outputs` rows of `inputs` values.
#[derive(Debug, Clone)]
pub struct FcLayer<D: Datapath> {
    pub params: FcParams,
    weights: Vec<D::Elem>,
    bias: Vec<D::Bias>,
    pub unit: D,
}

impl<D: Datapath> FcLayer<D> {
    pub fn new(params: FcParams, weights: Vec<D::Elem>, bias: Vec<D::Bias>, unit: D) -> Result<Self, EngineError> {
        let n = params.inputs * params.outputs;
        if weights.len() != n {
            return Err(EngineError::ElementCount { expected: n, found: weights.len() });
        }
        if bias.len() != params.outputs {
            return Err(EngineError::ElementCount { expected: params.outputs, found: bias.len() });
        }
        Ok(Self { params, weights, bias, unit })
    }
}

fn shape_err(msg: String) -> EngineError {
    EngineError::Shape(msg)
}

/// Convolution by explicit patch extraction (im2col): each output position
/// gathers its receptive field, padded with zeros, then one MAC per output
/// channel.
pub fn conv2d<D: Datapath>(
    input: &Tensor<D::Elem>,
    layer: &ConvLayer<D>,
    ctx: &mut ExecContext,
) -> Result<Tensor<D::Elem>, EngineError> {
    let p = &layer.params;
    let ([oh, ow, co_n], pt, pl) = p.geometry(input.shape()).map_err(shape_err)?;
    let [h, w, c] = [input.shape()[0], input.shape()[1], input.shape()[2]];
    let x = input.data();
    let mut patch = vec![D::Elem::default(); p.kernel_h * p.kernel_w * c];
    let mut out = Vec::with_capacity(oh * ow * co_n);
    for oy in 0..oh {
        for ox in 0..ow {
            let mut idx = 0;
            for ky in 0..p.kernel_h {
                let iy = (oy * p.stride + ky) as isize - pt as isize;
                for kx in 0..p.kernel_w {
                    let ix = (ox * p.stride + kx) as isize - pl as isize;
                    let dst = &mut patch[idx..idx + c];
                    if iy >= 0 && (iy as usize) < h && ix >= 0 && (ix as usize) < w {
                        let base = (iy as usize * w + ix as usize) * c;
                        dst.copy_from_slice(&x[base..base + c]);
                    } else {
                        dst.fill(D::Elem::default());
                    }
                    idx += c;
                }
            }
            for co in 0..co_n {
                let terms = patch.iter().copied().zip(layer.row(co).iter().copied());
                out.push(layer.unit.mac(terms, layer.bias[co], ctx));
            }
        }
    }
    Tensor::new(vec![oh, ow, co_n], out)
}

/// Convolution by direct sliding window, reading the input in place. Visits
/// the same terms in the same order as [`conv2d`], so results are identical
/// bit for bit.
pub fn conv2d_direct<D: Datapath>(
    input: &Tensor<D::Elem>,
    layer: &ConvLayer<D>,
    ctx: &mut ExecContext,
) -> Result<Tensor<D::Elem>, EngineError> {
    let p = &layer.params;
    let ([oh, ow, co_n], pt, pl) = p.geometry(input.shape()).map_err(shape_err)?;
    let [h, w, c] = [input.shape()[0], input.shape()[1], input.shape()[2]];
    let x = input.data();
    let mut out = Vec::with_capacity(oh * ow * co_n);
    for oy in 0..oh {
        for ox in 0..ow {
            for co in 0..co_n {
                let row = layer.row(co);
                let terms = (0..p.kernel_h * p.kernel_w * c).map(|t| {
                    let (ky, kx, ci) = (t / (p.kernel_w * c), (t / c) % p.kernel_w, t % c);
                    let iy = (oy * p.stride + ky) as isize - pt as isize;
                    let ix = (ox * p.stride + kx) as isize - pl as isize;
                    let v = if iy >= 0 && (iy as usize) < h && ix >= 0 && (ix as usize) < w {
                        x[(iy as usize * w + ix as usize) * c + ci]
                    } else {
                        D::Elem::default()
                    };
                    (v, row[t])
                });
                out.push(layer.unit.mac(terms, layer.bias[co], ctx));
            }
        }
    }
    Tensor::new(vec![oh, ow, co_n], out)
}

/// Fully connected layer on a flat input.
pub fn fc<D: Datapath>(input: &Tensor<D::Elem>, layer: &FcLayer<D>, ctx: &mut ExecContext) -> Result<Tensor<D::Elem>, EngineError> {
    let n = layer.params.inputs;
    if input.len() != n {
        return Err(shape_err(format!("fc expects {n} inputs, got {:?}", input.shape())));
    }
    let x = input.data();
    let out = layer
        .weights
        .chunks_exact(n)
        .zip(&layer.bias)
        .map(|(row, &b)| layer.unit.mac(x.iter().copied().zip(row.iter().copied()), b, ctx))
        .collect();
    Tensor::new(vec![layer.params.outputs], out)
}

/// Max pooling over HWC input without padding; trailing rows or columns that
/// do not fill a window are dropped.
pub fn maxpool<T: Copy + PartialOrd>(input: &Tensor<T>, params: &PoolParams) -> Result<Tensor<T>, EngineError> {
    let [oh, ow, c] = params.output_shape(input.shape()).map_err(shape_err)?;
    let w = input.shape()[1];
    let x = input.data();
    let mut out = Vec::with_capacity(oh * ow * c);
    for oy in 0..oh {
        for ox in 0..ow {
            for ch in 0..c {
                let mut best = x[((oy * params.stride) * w + ox * params.stride) * c + ch];
                for ky in 0..params.window {
                    for kx in 0..params.window {
                        let v = x[((oy * params.stride + ky) * w + ox * params.stride + kx) * c + ch];
                        if v > best {
                            best = v;
                        }
                    }
                }
                out.push(best);
            }
        }
    }
    Tensor::new(vec![oh, ow, c], out)
}

/// `max(x, 0)` elementwise.
pub fn relu<T: Copy + PartialOrd + Default>(input: &Tensor<T>) -> Tensor<T> {
    let zero = T::default();
    input.map(|&v| if v > zero { v } else { zero })
}
