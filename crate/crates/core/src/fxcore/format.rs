use std::fmt;

use serde::{Deserialize, Serialize};

use super::FxError;

/// Largest narrow word the simulator models.
pub const MAX_NARROW_BITS: u32 = 32;
/// Largest wide word: two 32-bit operands, their product, and up to 63 guard bits.
pub const MAX_WIDE_BITS: u32 = 127;

/// A signed two's-complement fixed-point format.
///
/// `int_bits` counts the sign bit, so `(IN, FR) = (4, 4)` spans `[-8, 7.9375]`
/// with a step of `1/16`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawFormat", into = "RawFormat")]
pub struct FxFormat {
    int_bits: u32,
    frac_bits: u32,
}

#[derive(Serialize, Deserialize)]
struct RawFormat {
    total_bits: u32,
    int_bits: u32,
}

impl TryFrom<RawFormat> for FxFormat {
    type Error = FxError;

    fn try_from(raw: RawFormat) -> Result<Self, FxError> {
        FxFormat::new(raw.total_bits, raw.int_bits)
    }
}

impl From<FxFormat> for RawFormat {
    fn from(f: FxFormat) -> Self {
        RawFormat { total_bits: f.total_bits(), int_bits: f.int_bits }
    }
}

impl FxFormat {
    /// A format with `total_bits` bits of which `int_bits` (sign included) are integer bits.
    pub fn new(total_bits: u32, int_bits: u32) -> Result<Self, FxError> {
        if !(2..=MAX_NARROW_BITS).contains(&total_bits) || int_bits == 0 || int_bits > total_bits {
            return Err(FxError::InvalidFormat { total_bits, int_bits });
        }
        Ok(Self { int_bits, frac_bits: total_bits - int_bits })
    }

    /// The symmetric split used by default sweeps: `IN = ceil(N / 2)`.
    pub fn half_split(total_bits: u32) -> Result<Self, FxError> {
        Self::new(total_bits, total_bits.div_ceil(2))
    }

    pub fn total_bits(self) -> u32 {
        self.int_bits + self.frac_bits
    }

    pub fn int_bits(self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    pub fn epsilon(self) -> f64 {
        (-(self.frac_bits as f64)).exp2()
    }

    pub fn min_raw(self) -> i64 {
        -(1i64 << (self.total_bits() - 1))
    }

    pub fn max_raw(self) -> i64 {
        (1i64 << (self.total_bits() - 1)) - 1
    }

    pub fn min_value(self) -> f64 {
        self.min_raw() as f64 * self.epsilon()
    }

    pub fn max_value(self) -> f64 {
        self.max_raw() as f64 * self.epsilon()
    }

    /// Format of the exact product of two words of this format.
    pub fn product(self) -> WideFormat {
        WideFormat { int_bits: 2 * self.int_bits, frac_bits: 2 * self.frac_bits }
    }

    /// Format of a product accumulator with `guard` extra high-order bits.
    pub fn accumulator(self, guard: u32) -> Result<WideFormat, FxError> {
        WideFormat::new(2 * self.int_bits + guard, 2 * self.frac_bits)
    }
}

impl fmt::Display for FxFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}

/// Format of a double-width product or accumulator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WideFormat {
    int_bits: u32,
    frac_bits: u32,
}

impl WideFormat {
    pub fn new(int_bits: u32, frac_bits: u32) -> Result<Self, FxError> {
        let total = int_bits + frac_bits;
        if int_bits == 0 || total > MAX_WIDE_BITS {
            return Err(FxError::InvalidWideFormat { int_bits, frac_bits });
        }
        Ok(Self { int_bits, frac_bits })
    }

    pub fn total_bits(self) -> u32 {
        self.int_bits + self.frac_bits
    }

    pub fn int_bits(self) -> u32 {
        self.int_bits
    }

    pub fn frac_bits(self) -> u32 {
        self.frac_bits
    }

    /// Same fraction, `extra` more integer bits. Sign extension keeps the raw value.
    pub fn widen(self, extra: u32) -> Result<Self, FxError> {
        Self::new(self.int_bits + extra, self.frac_bits)
    }
}

impl fmt::Display for WideFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q{}.{}", self.int_bits, self.frac_bits)
    }
}
