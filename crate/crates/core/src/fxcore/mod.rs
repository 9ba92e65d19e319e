//! Bit-exact fixed-point number system.
//!
//! Words are signed two's-complement integers with an attached format. A
//! product of two N-bit words is a [`WideWord`] of 2N bits with no loss; it is
//! brought back to N bits by [`adjust`], which first removes the excess
//! fraction bits with one of four [`RoundingMethod`]s and then selects N bits
//! with one of three [`AdjustMethod`]s.
//!
//! The [`bits`] module holds the raw integer kernels that the typed API and
//! the MAC datapaths in [`crate::engine`] share.

pub mod bits;
mod format;
mod rng;
mod rounding;
mod select;
mod word;

use thiserror::Error;

pub use format::{FxFormat, WideFormat, MAX_NARROW_BITS, MAX_WIDE_BITS};
pub use rng::RngStream;
pub use rounding::{quantize, quantize_raw, quantize_wide, round_excess, RoundingMethod};
pub use select::{adjust, select_bits, AdjustMethod};
pub use word::{full_multiply, wide_add, FxWord, WideWord};

/// Accumulator guard bits used unless a configuration says otherwise.
pub const DEFAULT_GUARD_BITS: u32 = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FxError {
    #[error("invalid format: {total_bits} total bits with {int_bits} integer bits")]
    InvalidFormat { total_bits: u32, int_bits: u32 },
    #[error("invalid wide format: {int_bits} integer bits, {frac_bits} fraction bits")]
    InvalidWideFormat { int_bits: u32, frac_bits: u32 },
    #[error("cannot quantize non-finite value {0}")]
    InvalidInput(f64),
    #[error("format mismatch: {left} vs {right}")]
    FormatMismatch { left: String, right: String },
    #[error("cannot round to {target_fr} fraction bits from {frac_bits}")]
    InvalidTarget { target_fr: u32, frac_bits: u32 },
    #[error("selection needs {target_fr} fraction bits but the word has {word_fr}; round first")]
    Sequencing { word_fr: u32, target_fr: u32 },
    #[error("raw value {raw} does not fit in {bits} bits")]
    RawOutOfRange { raw: i128, bits: u32 },
    #[error("normalization shift {0} is too large")]
    ShiftTooLarge(u32),
    #[error("unknown {kind} '{name}'")]
    UnknownName { kind: &'static str, name: String },
}
