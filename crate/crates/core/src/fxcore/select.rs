use std::fmt;

use serde::{Deserialize, Serialize};

use super::bits;
use super::rounding::round_excess;
use super::{FxError, FxFormat, FxWord, RngStream, RoundingMethod, WideWord};

/// How N bits are selected from a wide result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "method")]
pub enum AdjustMethod {
    /// No boundary check: keep the low N bits, wrapping on overflow.
    Nbc,
    /// Boundary check: saturate to the format's max or min on overflow.
    Bc,
    /// Normalization: divide by `2^shift` (select a window `shift` bits
    /// higher), then saturate.
    Norm { shift: u32 },
}

impl fmt::Display for AdjustMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdjustMethod::Nbc => f.write_str("nbc"),
            AdjustMethod::Bc => f.write_str("bc"),
            AdjustMethod::Norm { shift } => write!(f, "norm{shift}"),
        }
    }
}

/// Reduce an already-rounded wide word to `target`.
///
/// `w` must carry exactly `target.frac_bits()` fraction bits; rounding comes
/// first, selection second. Norm's `shift` discards its low bits by arithmetic
/// shift here; [`adjust`] instead rounds them together with the fraction bits.
pub fn select_bits(w: WideWord, target: FxFormat, method: AdjustMethod) -> Result<FxWord, FxError> {
    if w.format().frac_bits() != target.frac_bits() {
        return Err(FxError::Sequencing {
            word_fr: w.format().frac_bits(),
            target_fr: target.frac_bits(),
        });
    }
    let n = target.total_bits();
    let raw = match method {
        AdjustMethod::Nbc => bits::wrap(w.raw(), n),
        AdjustMethod::Bc => bits::saturate(w.raw(), n),
        AdjustMethod::Norm { shift } => bits::saturate(w.raw() >> shift.min(127), n),
    };
    FxWord::from_raw(raw as i64, target)
}

/// Round then select: the full precision adjustment of a wide result.
///
/// For NBC and BC this is exactly `select_bits(round_excess(w, FR), target)`.
/// For `Norm { shift }` the window sits `shift` bits higher, and every bit
/// below it (the excess fraction bits and the `shift` bits) is removed by one
/// rounding step before saturating. That is the same as moving the binary
/// point `shift` places left and then adjusting with BC.
pub fn adjust(
    w: WideWord,
    target: FxFormat,
    rounding: RoundingMethod,
    method: AdjustMethod,
    rng: &mut RngStream,
) -> Result<FxWord, FxError> {
    match method {
        AdjustMethod::Nbc | AdjustMethod::Bc => {
            let rounded = round_excess(w, target.frac_bits(), rounding, rng)?;
            select_bits(rounded, target, method)
        }
        AdjustMethod::Norm { shift } => {
            let fr = w.format().frac_bits();
            if target.frac_bits() > fr {
                return Err(FxError::InvalidTarget { target_fr: target.frac_bits(), frac_bits: fr });
            }
            let k = fr - target.frac_bits() + shift;
            if k > 126 {
                return Err(FxError::ShiftTooLarge(shift));
            }
            let raw = bits::round_off(w.raw(), k, rounding, rng);
            FxWord::from_raw(bits::saturate(raw, target.total_bits()) as i64, target)
        }
    }
}
