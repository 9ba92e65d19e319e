use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::EngineError;
use crate::fxcore::{AdjustMethod, FxFormat, RoundingMethod, DEFAULT_GUARD_BITS};

/// Overflow bits a Norm window reserves after the last add, unless configured.
pub const DEFAULT_NORM_OVERFLOW_BITS: u32 = 2;

/// Where the precision of a multiply-accumulate is adjusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MacPosition {
    /// After every multiplication; products are summed at N bits.
    Rmult,
    /// Once, after the products have been summed at 2N + G bits.
    Rmac,
}

impl MacPosition {
    pub const ALL: [MacPosition; 2] = [MacPosition::Rmult, MacPosition::Rmac];

    pub fn label(self) -> &'static str {
        match self {
            MacPosition::Rmult => "rmult",
            MacPosition::Rmac => "rmac",
        }
    }
}

impl fmt::Display for MacPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for MacPosition {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, EngineError> {
        match s.to_ascii_lowercase().as_str() {
            "rmult" => Ok(MacPosition::Rmult),
            "rmac" => Ok(MacPosition::Rmac),
            _ => Err(EngineError::UnknownName { kind: "position", name: s.to_string() }),
        }
    }
}

/// Where Norm takes its per-layer shift from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormShiftPolicy {
    /// Per-layer shifts and input/weight scales from a calibrated scale plan.
    Calibrated,
    /// The shift in `AdjustMethod::Norm` for every layer; no input or weight scaling.
    Fixed,
}

impl NormShiftPolicy {
    pub fn label(self) -> &'static str {
        match self {
            NormShiftPolicy::Calibrated => "calibrated",
            NormShiftPolicy::Fixed => "fixed",
        }
    }
}

/// One cell of an experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FxConfig {
    pub format: FxFormat,
    pub rounding: RoundingMethod,
    pub adjust: AdjustMethod,
    pub position: MacPosition,
    pub norm_policy: NormShiftPolicy,
    /// Extra high-order bits in the Norm window under RMAC (0..=3).
    pub norm_overflow_bits: u32,
    /// Accumulator guard bits under RMAC.
    pub guard_bits: u32,
    pub seed: u64,
}

impl FxConfig {
    /// A configuration with the default guard bits, two Norm overflow bits,
    /// a calibrated Norm policy and seed 0.
    pub fn new(format: FxFormat, rounding: RoundingMethod, adjust: AdjustMethod, position: MacPosition) -> Self {
        Self {
            format,
            rounding,
            adjust,
            position,
            norm_policy: NormShiftPolicy::Calibrated,
            norm_overflow_bits: DEFAULT_NORM_OVERFLOW_BITS,
            guard_bits: DEFAULT_GUARD_BITS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_norm_overflow_bits(mut self, bits: u32) -> Self {
        self.norm_overflow_bits = bits;
        self
    }

    pub fn with_norm_policy(mut self, policy: NormShiftPolicy) -> Self {
        self.norm_policy = policy;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.norm_overflow_bits > 3 {
            return Err(EngineError::InvalidConfig(format!(
                "norm_overflow_bits must be 0..=3, got {}",
                self.norm_overflow_bits
            )));
        }
        self.format.accumulator(self.guard_bits)?;
        Ok(())
    }

    pub fn is_norm(&self) -> bool {
        matches!(self.adjust, AdjustMethod::Norm { .. })
    }

    /// Norm policy label for reports: `calibrated`, `fixed:<s>` or `none`.
    pub fn norm_policy_label(&self) -> String {
        match (self.adjust, self.norm_policy) {
            (AdjustMethod::Norm { .. }, NormShiftPolicy::Calibrated) => "calibrated".to_string(),
            (AdjustMethod::Norm { shift }, NormShiftPolicy::Fixed) => format!("fixed:{shift}"),
            _ => "none".to_string(),
        }
    }

    /// Adjust-method family label: `nbc`, `bc` or `norm`.
    pub fn adjust_label(&self) -> &'static str {
        match self.adjust {
            AdjustMethod::Nbc => "nbc",
            AdjustMethod::Bc => "bc",
            AdjustMethod::Norm { .. } => "norm",
        }
    }
}

impl fmt::Display for FxConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.format, self.rounding, self.adjust_label(), self.position)?;
        if self.is_norm() {
            write!(f, " {}", self.norm_policy_label())?;
            if self.position == MacPosition::Rmac {
                write!(f, " ovf{}", self.norm_overflow_bits)?;
            }
        }
        Ok(())
    }
}

/// Reference real arithmetic or a fixed-point configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Arithmetic {
    Real,
    Fixed(FxConfig),
}
