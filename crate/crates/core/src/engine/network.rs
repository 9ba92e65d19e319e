use super::layers::{conv2d, fc, maxpool, relu, ConvLayer, FcLayer, PoolParams};
use super::mac::{Datapath, ExecContext};
use super::tensor::Tensor;
use super::EngineError;

#[derive(Debug, Clone)]
pub enum Layer<D: Datapath> {
    Conv(ConvLayer<D>),
    Fc(FcLayer<D>),
    MaxPool(PoolParams),
    Relu,
    /// HWC to a flat vector, channel fastest.
    Flatten,
}

impl<D: Datapath> Layer<D> {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Conv(_) => "conv",
            Layer::Fc(_) => "fc",
            Layer::MaxPool(_) => "maxpool",
            Layer::Relu => "relu",
            Layer::Flatten => "flatten",
        }
    }

    fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match self {
            Layer::Conv(c) => c.params.geometry(input).map(|(s, _, _)| s.to_vec()),
            Layer::Fc(f) => {
                let n: usize = input.iter().product();
                if input.len() != 1 || n != f.params.inputs {
                    return Err(format!("fc expects [{}], got {input:?}", f.params.inputs));
                }
                Ok(vec![f.params.outputs])
            }
            Layer::MaxPool(p) => p.output_shape(input).map(|s| s.to_vec()),
            Layer::Relu => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    pub fn forward(&self, x: Tensor<D::Elem>, ctx: &mut ExecContext) -> Result<Tensor<D::Elem>, EngineError> {
        match self {
            Layer::Conv(c) => conv2d(&x, c, ctx),
            Layer::Fc(f) => fc(&x, f, ctx),
            Layer::MaxPool(p) => maxpool(&x, p),
            Layer::Relu => Ok(relu(&x)),
            Layer::Flatten => {
                let n = x.len();
                Ok(x.reshaped(vec![n]))
            }
        }
    }
}

/// Logits and the predicted class of one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Inference<T> {
    pub logits: Vec<T>,
    pub class: usize,
}

/// A layer sequence whose shapes have been checked to compose.
#[derive(Debug, Clone)]
pub struct Network<D: Datapath> {
    input_shape: Vec<usize>,
    layers: Vec<Layer<D>>,
    output_shape: Vec<usize>,
}

impl<D: Datapath> Network<D> {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer<D>>) -> Result<Self, EngineError> {
        let mut shape = input_shape.clone();
        for (index, layer) in layers.iter().enumerate() {
            shape = layer
                .output_shape(&shape)
                .map_err(|reason| EngineError::LayerShape { index, kind: layer.kind(), reason })?;
        }
        Ok(Self { input_shape, layers, output_shape: shape })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        &self.output_shape
    }

    pub fn layers(&self) -> &[Layer<D>] {
        &self.layers
    }

    /// Run every layer in order.
    pub fn forward(&self, input: Tensor<D::Elem>, ctx: &mut ExecContext) -> Result<Tensor<D::Elem>, EngineError> {
        if input.shape() != self.input_shape.as_slice() {
            return Err(EngineError::Shape(format!(
                "network expects input {:?}, got {:?}",
                self.input_shape,
                input.shape()
            )));
        }
        self.layers.iter().try_fold(input, |x, layer| layer.forward(x, ctx))
    }

    pub fn infer(&self, input: Tensor<D::Elem>, ctx: &mut ExecContext) -> Result<Inference<D::Elem>, EngineError> {
        let logits = self.forward(input, ctx)?.into_data();
        let class = argmax(&logits);
        Ok(Inference { logits, class })
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: PartialOrd>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
