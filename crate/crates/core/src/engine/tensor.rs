use super::EngineError;
use crate::fxcore::{FxFormat, FxWord};

/// Dense row-major tensor.
///
/// Activations are laid out height, width, channel (HWC) with the channel
/// index varying fastest; vectors have a single dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self, EngineError> {
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(EngineError::ElementCount { expected, found: data.len() });
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Tensor<U> {
        Tensor { shape: self.shape.clone(), data: self.data.iter().map(f).collect() }
    }

    pub(crate) fn reshaped(self, shape: Vec<usize>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), self.data.len());
        Self { shape, data: self.data }
    }
}

impl<T: Clone> Tensor<T> {
    pub fn filled(shape: Vec<usize>, value: T) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![value; n] }
    }
}

/// A tensor of fixed-point words sharing one format, stored as raw integers.
#[derive(Debug, Clone, PartialEq)]
pub struct FxTensor {
    format: FxFormat,
    raw: Tensor<i32>,
}

impl FxTensor {
    pub fn from_raw(format: FxFormat, raw: Tensor<i32>) -> Result<Self, EngineError> {
        let (lo, hi) = (format.min_raw(), format.max_raw());
        if let Some(&bad) = raw.data().iter().find(|&&r| (r as i64) < lo || (r as i64) > hi) {
            return Err(EngineError::Fx(crate::fxcore::FxError::RawOutOfRange {
                raw: bad as i128,
                bits: format.total_bits(),
            }));
        }
        Ok(Self { format, raw })
    }

    pub fn from_words(shape: Vec<usize>, words: &[FxWord]) -> Result<Self, EngineError> {
        let format = match words.first() {
            Some(w) => w.format(),
            None => return Err(EngineError::ElementCount { expected: shape.iter().product(), found: 0 }),
        };
        if let Some(w) = words.iter().find(|w| w.format() != format) {
            return Err(EngineError::Fx(crate::fxcore::FxError::FormatMismatch {
                left: format.to_string(),
                right: w.format().to_string(),
            }));
        }
        let raw = Tensor::new(shape, words.iter().map(|w| w.raw() as i32).collect())?;
        Ok(Self { format, raw })
    }

    pub fn format(&self) -> FxFormat {
        self.format
    }

    pub fn raw(&self) -> &Tensor<i32> {
        &self.raw
    }

    pub fn into_raw(self) -> Tensor<i32> {
        self.raw
    }

    pub fn words(&self) -> Vec<FxWord> {
        self.raw
            .data()
            .iter()
            .map(|&r| FxWord::from_raw(r as i64, self.format).expect("checked at construction"))
            .collect()
    }

    pub fn values(&self) -> Tensor<f64> {
        let eps = self.format.epsilon();
        self.raw.map(|&r| r as f64 * eps)
    }
}
