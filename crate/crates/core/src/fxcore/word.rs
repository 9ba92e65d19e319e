use std::fmt;

use super::bits;
use super::{FxError, FxFormat, WideFormat};

/// A narrow fixed-point word: raw two's-complement integer plus its format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FxWord {
    raw: i64,
    format: FxFormat,
}

impl FxWord {
    pub fn from_raw(raw: i64, format: FxFormat) -> Result<Self, FxError> {
        if raw < format.min_raw() || raw > format.max_raw() {
            return Err(FxError::RawOutOfRange { raw: raw as i128, bits: format.total_bits() });
        }
        Ok(Self { raw, format })
    }

    pub fn zero(format: FxFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn raw(self) -> i64 {
        self.raw
    }

    pub fn format(self) -> FxFormat {
        self.format
    }

    pub fn value(self) -> f64 {
        self.raw as f64 * self.format.epsilon()
    }

    /// Reinterpret as a wide word with the same value.
    pub fn to_wide(self) -> WideWord {
        WideWord {
            raw: self.raw as i128,
            format: WideFormat::new(self.format.int_bits(), self.format.frac_bits())
                .expect("narrow formats are valid wide formats"),
        }
    }
}

impl fmt::Display for FxWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.value(), self.format)
    }
}

/// A double-width product or accumulator word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct WideWord {
    raw: i128,
    format: WideFormat,
}

impl WideWord {
    pub fn from_raw(raw: i128, format: WideFormat) -> Result<Self, FxError> {
        if !bits::fits(raw, format.total_bits()) {
            return Err(FxError::RawOutOfRange { raw, bits: format.total_bits() });
        }
        Ok(Self { raw, format })
    }

    pub fn zero(format: WideFormat) -> Self {
        Self { raw: 0, format }
    }

    pub fn raw(self) -> i128 {
        self.raw
    }

    pub fn format(self) -> WideFormat {
        self.format
    }

    /// Nearest binary64 to the represented value.
    pub fn value(self) -> f64 {
        self.raw as f64 * (-(self.format.frac_bits() as f64)).exp2()
    }

    /// Sign-extend into a format with `guard` more integer bits.
    pub fn widen(self, guard: u32) -> Result<Self, FxError> {
        Ok(Self { raw: self.raw, format: self.format.widen(guard)? })
    }
}

/// Exact product of two words of the same format.
pub fn full_multiply(a: FxWord, b: FxWord) -> Result<WideWord, FxError> {
    if a.format != b.format {
        return Err(FxError::FormatMismatch {
            left: a.format.to_string(),
            right: b.format.to_string(),
        });
    }
    Ok(WideWord { raw: a.raw as i128 * b.raw as i128, format: a.format.product() })
}

/// Two's-complement addition at the accumulator width.
///
/// Returns the wrapped sum and whether the exact sum left the representable
/// range. Overflow is reported, never an error.
pub fn wide_add(acc: WideWord, addend: WideWord) -> Result<(WideWord, bool), FxError> {
    if acc.format != addend.format {
        return Err(FxError::FormatMismatch {
            left: acc.format.to_string(),
            right: addend.format.to_string(),
        });
    }
    let bits_ = acc.format.total_bits();
    let exact = acc.raw + addend.raw;
    let overflow = !bits::fits(exact, bits_);
    Ok((WideWord { raw: bits::wrap(exact, bits_), format: acc.format }, overflow))
}
