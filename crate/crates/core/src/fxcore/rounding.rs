use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::bits;
use super::{FxError, FxFormat, FxWord, RngStream, WideFormat, WideWord};

/// How excess low-order bits are removed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RoundingMethod {
    /// Drop the excess bits (floor toward minus infinity).
    #[serde(rename = "trunc")]
    Truncate,
    /// Nearest representable value, exact ties rounded up.
    #[serde(rename = "rn")]
    RoundToNearest,
    /// Round up with probability equal to the excess divided by one step.
    #[serde(rename = "sr")]
    Stochastic,
    /// Round-to-nearest when the truncated LSB is 0, truncation when it is 1.
    Rom,
}

impl RoundingMethod {
    pub const ALL: [RoundingMethod; 4] = [
        RoundingMethod::Truncate,
        RoundingMethod::RoundToNearest,
        RoundingMethod::Stochastic,
        RoundingMethod::Rom,
    ];

    pub fn label(self) -> &'static str {
        match self {
            RoundingMethod::Truncate => "trunc",
            RoundingMethod::RoundToNearest => "rn",
            RoundingMethod::Stochastic => "sr",
            RoundingMethod::Rom => "rom",
        }
    }
}

impl fmt::Display for RoundingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for RoundingMethod {
    type Err = FxError;

    fn from_str(s: &str) -> Result<Self, FxError> {
        match s.to_ascii_lowercase().as_str() {
            "trunc" | "truncate" | "truncation" => Ok(RoundingMethod::Truncate),
            "rn" | "nearest" => Ok(RoundingMethod::RoundToNearest),
            "sr" | "stochastic" => Ok(RoundingMethod::Stochastic),
            "rom" => Ok(RoundingMethod::Rom),
            _ => Err(FxError::UnknownName { kind: "rounding method", name: s.to_string() }),
        }
    }
}

/// Round a real number onto the grid `2^-frac_bits` and saturate it into a
/// signed `total_bits` word. Returns the raw integer.
///
/// The scaled value `x * 2^frac_bits` is exact in binary64, and so is its
/// fractional part, so truncation, nearest and ROM decisions are exact.
/// Stochastic rounding compares the fractional part against a 53-bit uniform
/// draw; one draw is taken per call.
pub fn quantize_raw(
    x: f64,
    frac_bits: u32,
    total_bits: u32,
    method: RoundingMethod,
    rng: &mut RngStream,
) -> Result<i128, FxError> {
    if !x.is_finite() {
        return Err(FxError::InvalidInput(x));
    }
    let scaled = x * (frac_bits as f64).exp2();
    let floor = scaled.floor();
    let frac = scaled - floor;
    let up = match method {
        RoundingMethod::Truncate => false,
        RoundingMethod::RoundToNearest => frac >= 0.5,
        RoundingMethod::Rom => frac >= 0.5 && floor.rem_euclid(2.0) == 0.0,
        RoundingMethod::Stochastic => rng.unit() < frac,
    };
    let (lo, hi) = (bits::min_of(total_bits), bits::max_of(total_bits));
    if floor > hi as f64 {
        return Ok(hi);
    }
    if floor < lo as f64 {
        return Ok(lo);
    }
    Ok(bits::saturate(floor as i128 + up as i128, total_bits))
}

/// Convert a real number to `fmt`: round per `method`, then saturate to
/// `[fmt.min, fmt.max]`.
pub fn quantize(
    x: f64,
    fmt: FxFormat,
    method: RoundingMethod,
    rng: &mut RngStream,
) -> Result<FxWord, FxError> {
    let raw = quantize_raw(x, fmt.frac_bits(), fmt.total_bits(), method, rng)?;
    FxWord::from_raw(raw as i64, fmt)
}

/// Convert a real number straight into a wide (accumulator) format.
pub fn quantize_wide(
    x: f64,
    fmt: WideFormat,
    method: RoundingMethod,
    rng: &mut RngStream,
) -> Result<WideWord, FxError> {
    let raw = quantize_raw(x, fmt.frac_bits(), fmt.total_bits(), method, rng)?;
    WideWord::from_raw(raw, fmt)
}

/// Remove fraction bits from a wide word so it has `target_fr` of them.
///
/// The integer field gains one bit whenever bits are removed, so a round-up
/// carry out of the top (rounding the largest value upward) is represented
/// instead of wrapping. Width reduction is left to the selection step.
pub fn round_excess(
    w: WideWord,
    target_fr: u32,
    method: RoundingMethod,
    rng: &mut RngStream,
) -> Result<WideWord, FxError> {
    let fr = w.format().frac_bits();
    if target_fr > fr {
        return Err(FxError::InvalidTarget { target_fr, frac_bits: fr });
    }
    let k = fr - target_fr;
    if k == 0 {
        return Ok(w);
    }
    let raw = bits::round_off(w.raw(), k, method, rng);
    let format = WideFormat::new(w.format().int_bits() + 1, target_fr)?;
    WideWord::from_raw(raw, format)
}
