use std::fmt::Debug;

use super::config::{FxConfig, MacPosition};
use super::EngineError;
use crate::fxcore::bits;
use crate::fxcore::{AdjustMethod, FxError, FxWord, RngStream, RoundingMethod};

/// Per-inference mutable state: the rounding stream and overflow tally.
#[derive(Debug, Clone)]
pub struct ExecContext {
    pub rng: RngStream,
    /// Values clipped or wrapped at a select step, plus narrow or wide
    /// accumulator overflows.
    pub overflow_events: u64,
}

impl ExecContext {
    pub fn new(rng: RngStream) -> Self {
        Self { rng, overflow_events: 0 }
    }
}

/// The arithmetic of one dot product: real reference or fixed-point.
pub trait Datapath: Send + Sync {
    type Elem: Copy + PartialOrd + Default + Send + Sync + Debug;
    type Bias: Copy + Send + Sync + Debug;

    /// Sum `x * w` over `terms` in iteration order, add `bias`, and return
    /// the result in the element domain.
    fn mac<I>(&self, terms: I, bias: Self::Bias, ctx: &mut ExecContext) -> Self::Elem
    where
        I: Iterator<Item = (Self::Elem, Self::Elem)>;
}

/// Binary64 reference arithmetic.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RealMac;

impl Datapath for RealMac {
    type Elem = f64;
    type Bias = f64;

    #[inline]
    fn mac<I>(&self, terms: I, bias: f64, _ctx: &mut ExecContext) -> f64
    where
        I: Iterator<Item = (f64, f64)>,
    {
        let mut acc = 0.0;
        for (x, w) in terms {
            acc += x * w;
        }
        acc + bias
    }
}

/// Bit-exact fixed-point MAC on raw words of one narrow format.
///
/// Elements are raw N-bit integers at FR fraction bits. The bias is raw too:
/// at FR fraction bits under RMULT, at 2FR bits under RMAC (it joins the wide
/// accumulator before the single adjustment).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedMac {
    position: MacPosition,
    rounding: RoundingMethod,
    wrap: bool,
    n_bits: u32,
    acc_bits: u32,
    /// Bits removed by the adjust step: FR plus the Norm window shift.
    excess: i32,
}

impl FixedMac {
    /// Datapath for `cfg` with a Norm window `shift` bits above the natural
    /// one. The shift is ignored for NBC and BC. Under RMAC the configured
    /// Norm overflow bits are added on top.
    pub fn new(cfg: &FxConfig, shift: i32) -> Result<Self, EngineError> {
        cfg.validate()?;
        let fr = cfg.format.frac_bits() as i32;
        let window = match cfg.adjust {
            AdjustMethod::Nbc | AdjustMethod::Bc => 0,
            AdjustMethod::Norm { .. } => match cfg.position {
                MacPosition::Rmult => shift,
                MacPosition::Rmac => shift + cfg.norm_overflow_bits as i32,
            },
        };
        let excess = fr + window;
        if excess > 126 {
            return Err(EngineError::Fx(FxError::ShiftTooLarge(window.unsigned_abs())));
        }
        Ok(Self {
            position: cfg.position,
            rounding: cfg.rounding,
            wrap: cfg.adjust == AdjustMethod::Nbc,
            n_bits: cfg.format.total_bits(),
            acc_bits: cfg.format.accumulator(cfg.guard_bits)?.total_bits(),
            excess,
        })
    }

    pub fn position(&self) -> MacPosition {
        self.position
    }

    /// Total bits dropped from a product (RMULT) or the sum (RMAC).
    pub fn excess_bits(&self) -> i32 {
        self.excess
    }

    #[inline]
    fn select(&self, raw: i128, ctx: &mut ExecContext) -> i128 {
        if bits::fits(raw, self.n_bits) {
            return raw;
        }
        ctx.overflow_events += 1;
        if self.wrap {
            bits::wrap(raw, self.n_bits)
        } else {
            bits::saturate(raw, self.n_bits)
        }
    }

    #[inline]
    fn add_wide(&self, acc: i128, v: i128, ctx: &mut ExecContext) -> i128 {
        let sum = acc + v;
        if bits::fits(sum, self.acc_bits) {
            sum
        } else {
            ctx.overflow_events += 1;
            bits::wrap(sum, self.acc_bits)
        }
    }
}

const TRUNC: u8 = 0;
const RN: u8 = 1;
const SR: u8 = 2;
const ROM: u8 = 3;

/// `bits::round_off` on 64-bit words, specialised per rounding method.
#[inline(always)]
fn round64<const M: u8>(raw: i64, k: u32, rng: &mut RngStream) -> i64 {
    if k == 0 {
        return raw;
    }
    let floor = raw >> k;
    let excess = raw & ((1i64 << k) - 1);
    let up = match M {
        TRUNC => false,
        RN => excess >= 1i64 << (k - 1),
        ROM => floor & 1 == 0 && excess >= 1i64 << (k - 1),
        _ => (rng.bits(k) as i64) < excess,
    };
    floor + up as i64
}

impl FixedMac {
    #[inline]
    fn select64(&self, raw: i64, ctx: &mut ExecContext) -> i64 {
        let hi = (1i64 << (self.n_bits - 1)) - 1;
        let lo = -hi - 1;
        if raw >= lo && raw <= hi {
            return raw;
        }
        ctx.overflow_events += 1;
        if self.wrap {
            let unused = 64 - self.n_bits;
            (raw << unused) >> unused
        } else {
            raw.clamp(lo, hi)
        }
    }

    // Products of two N <= 32 bit words fit in 63 bits, and the narrow
    // accumulator never exceeds 33 bits before selection.
    #[inline(always)]
    fn rmult64<const M: u8, I: Iterator<Item = (i32, i32)>>(&self, terms: I, bias: i128, ctx: &mut ExecContext) -> i32 {
        let k = self.excess as u32;
        let mut acc = 0i64;
        for (x, w) in terms {
            let q = round64::<M>(x as i64 * w as i64, k, &mut ctx.rng);
            let q = self.select64(q, ctx);
            acc = self.select64(acc + q, ctx);
        }
        self.select64(acc + bias as i64, ctx) as i32
    }

    #[inline(always)]
    fn rmac64<const M: u8, I: Iterator<Item = (i32, i32)>>(&self, terms: I, bias: i128, ctx: &mut ExecContext) -> i32 {
        let hi = (1i64 << (self.acc_bits - 1)) - 1;
        let lo = -hi - 1;
        let unused = 64 - self.acc_bits;
        let mut acc = 0i64;
        for (x, w) in terms {
            acc += x as i64 * w as i64;
            if acc < lo || acc > hi {
                ctx.overflow_events += 1;
                acc = (acc << unused) >> unused;
            }
        }
        acc = self.add_wide(acc as i128, bias, ctx) as i64;
        let q = round64::<M>(acc, self.excess as u32, &mut ctx.rng);
        self.select64(q, ctx) as i32
    }

    fn generic_mac<I: Iterator<Item = (i32, i32)>>(&self, terms: I, bias: i128, ctx: &mut ExecContext) -> i32 {
        match self.position {
            MacPosition::Rmult => {
                let mut acc = 0i128;
                for (x, w) in terms {
                    let p = x as i64 as i128 * w as i128;
                    let q = bits::rescale(p, self.excess, self.rounding, &mut ctx.rng);
                    let q = self.select(q, ctx);
                    acc = self.select(acc + q, ctx);
                }
                self.select(acc + bias, ctx) as i32
            }
            MacPosition::Rmac => {
                let mut acc = 0i128;
                for (x, w) in terms {
                    acc = self.add_wide(acc, x as i64 as i128 * w as i128, ctx);
                }
                acc = self.add_wide(acc, bias, ctx);
                let q = bits::rescale(acc, self.excess, self.rounding, &mut ctx.rng);
                self.select(q, ctx) as i32
            }
        }
    }
}

macro_rules! dispatch {
    ($self:ident, $f:ident, $terms:ident, $bias:ident, $ctx:ident) => {
        match $self.rounding {
            RoundingMethod::Truncate => $self.$f::<TRUNC, _>($terms, $bias, $ctx),
            RoundingMethod::RoundToNearest => $self.$f::<RN, _>($terms, $bias, $ctx),
            RoundingMethod::Stochastic => $self.$f::<SR, _>($terms, $bias, $ctx),
            RoundingMethod::Rom => $self.$f::<ROM, _>($terms, $bias, $ctx),
        }
    };
}

impl Datapath for FixedMac {
    type Elem = i32;
    type Bias = i128;

    #[inline]
    fn mac<I>(&self, terms: I, bias: i128, ctx: &mut ExecContext) -> i32
    where
        I: Iterator<Item = (i32, i32)>,
    {
        // The 64-bit paths give identical results whenever every
        // intermediate fits; otherwise fall back to 128 bits.
        let fast_shift = (0..=62).contains(&self.excess);
        match self.position {
            MacPosition::Rmult if fast_shift && bits::fits(bias, 40) => dispatch!(self, rmult64, terms, bias, ctx),
            MacPosition::Rmac if fast_shift && self.acc_bits <= 62 => dispatch!(self, rmac64, terms, bias, ctx),
            _ => self.generic_mac(terms, bias, ctx),
        }
    }
}

fn check_operands(inputs: &[FxWord], weights: &[FxWord], bias: FxWord, cfg: &FxConfig) -> Result<(), EngineError> {
    if inputs.len() != weights.len() {
        return Err(EngineError::ElementCount { expected: inputs.len(), found: weights.len() });
    }
    if let Some(w) = inputs.iter().chain(weights).chain([&bias]).find(|w| w.format() != cfg.format) {
        return Err(EngineError::Fx(FxError::FormatMismatch {
            left: cfg.format.to_string(),
            right: w.format().to_string(),
        }));
    }
    Ok(())
}

fn norm_shift(cfg: &FxConfig) -> i32 {
    match cfg.adjust {
        AdjustMethod::Norm { shift } => shift as i32,
        _ => 0,
    }
}

/// Dot product with precision adjusted after every multiplication.
///
/// Each product is rounded to FR bits and selected to N bits; the running sum
/// and the bias are accumulated at N bits (wrapping for NBC, saturating
/// otherwise). `cfg.position` is not consulted.
pub fn mac_rmult(
    inputs: &[FxWord],
    weights: &[FxWord],
    bias: FxWord,
    cfg: &FxConfig,
    rng: &mut RngStream,
) -> Result<FxWord, EngineError> {
    check_operands(inputs, weights, bias, cfg)?;
    let cfg = FxConfig { position: MacPosition::Rmult, ..*cfg };
    run_typed(inputs, weights, bias.raw() as i128, &cfg, rng)
}

/// Dot product with exact accumulation and one adjustment at the end.
///
/// Products are summed at 2N + G bits, the bias enters the wide accumulator
/// exactly, and the total is rounded and selected once. `cfg.position` is not
/// consulted.
pub fn mac_rmac(
    inputs: &[FxWord],
    weights: &[FxWord],
    bias: FxWord,
    cfg: &FxConfig,
    rng: &mut RngStream,
) -> Result<FxWord, EngineError> {
    check_operands(inputs, weights, bias, cfg)?;
    let cfg = FxConfig { position: MacPosition::Rmac, ..*cfg };
    let wide_bias = (bias.raw() as i128) << cfg.format.frac_bits();
    run_typed(inputs, weights, wide_bias, &cfg, rng)
}

fn run_typed(
    inputs: &[FxWord],
    weights: &[FxWord],
    bias: i128,
    cfg: &FxConfig,
    rng: &mut RngStream,
) -> Result<FxWord, EngineError> {
    let unit = FixedMac::new(cfg, norm_shift(cfg))?;
    let mut ctx = ExecContext::new(rng.clone());
    let terms = inputs.iter().zip(weights).map(|(x, w)| (x.raw() as i32, w.raw() as i32));
    let raw = unit.mac(terms, bias, &mut ctx);
    *rng = ctx.rng;
    Ok(FxWord::from_raw(raw as i64, cfg.format)?)
}
